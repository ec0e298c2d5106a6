//! Accepted fraction of a λ grid as a function of `ε`, with `γ = ε^a`.

use rayon::prelude::*;
use serde::Serialize;

use super::newton::{nash_moser, NashMoserConfig};
use crate::error::{Error, Result};
use crate::kamreduce::{mask_fraction, melnikov_violation, MelnikovOrder, LOCALITY_FACTOR};
use crate::nonlin::NonlinearitySpec;
use crate::opalg::DiagonalOperator;
use crate::spectral::{Frequency, Truncation};

#[derive(Clone, Debug, Serialize)]
pub struct GammaRule {
    /// `γ = ε^a`.
    pub a: f64,
    pub gammas: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureReport {
    pub epsilons: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// Accepted fraction per `ε`.
    pub fractions: Vec<f64>,
    /// Fraction accepted by the masks at `μ_j = −i j³` with the same `γ`.
    pub baseline: Vec<f64>,
    /// `masks[e][k]`: λ_k accepted at ε_e.
    pub masks: Vec<Vec<bool>>,
    pub baseline_masks: Vec<Vec<bool>>,
    pub gamma_rule: GammaRule,
}

/// Both Melnikov conditions at `μ_j = −i j³`, `|l| <= n`.
pub fn baseline_mask(omega_bar: &[f64], n_x: usize, lambdas: &[f64], gamma: f64, tau: f64, n: usize) -> Vec<bool> {
    let eigs = DiagonalOperator::dispersive(n_x, 1.0, 0.0);
    lambdas
        .par_iter()
        .map(|&lambda| {
            [MelnikovOrder::First, MelnikovOrder::Second].iter().all(|&order| {
                melnikov_violation(&eigs, omega_bar, lambda, gamma, tau, n, order, Some(LOCALITY_FACTOR)).is_none()
            })
        })
        .collect()
}

/// Runs [`nash_moser`] for every `(ε, λ)` pair with `γ = ε^a`.
///
/// A λ counts as accepted when the iteration converges without exclusion;
/// failures of any other kind count as rejections.
pub fn cantor_measure(
    spec: &NonlinearitySpec,
    freq: &Frequency<f64>,
    trunc: Truncation,
    epsilons: &[f64],
    lambdas: &[f64],
    a: f64,
    cfg: &NashMoserConfig,
) -> Result<MeasureReport> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidParameter(format!("gamma exponent a = {a} outside (0, 1)")));
    }
    let gammas: Vec<f64> = epsilons.iter().map(|e| e.abs().powf(a)).collect();
    let mut masks = Vec::with_capacity(epsilons.len());
    let mut baseline_masks = Vec::with_capacity(epsilons.len());
    for (&eps, &gamma) in epsilons.iter().zip(&gammas) {
        let spec_e = spec.with_epsilon(eps)?;
        let cfg_e = NashMoserConfig { gamma, ..cfg.clone() };
        let mask: Vec<bool> = lambdas
            .par_iter()
            .map(|&lambda| {
                let Ok(f) = freq.with_lambda(lambda) else { return false };
                match nash_moser(&spec_e, &f, trunc, &cfg_e) {
                    Ok(r) => r.converged && !r.excluded_lambda,
                    Err(_) => false,
                }
            })
            .collect();
        masks.push(mask);
        baseline_masks.push(baseline_mask(freq.omega_bar(), trunc.n_x, lambdas, gamma, cfg.tau, 2 * trunc.n_phi));
    }
    Ok(MeasureReport {
        epsilons: epsilons.to_vec(),
        lambdas: lambdas.to_vec(),
        fractions: masks.iter().map(|m| mask_fraction(m)).collect(),
        baseline: baseline_masks.iter().map(|m| mask_fraction(m)).collect(),
        masks,
        baseline_masks,
        gamma_rule: GammaRule { a, gammas },
    })
}

//! Melnikov non-resonance masks over a λ grid and eigenvalue diagnostics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::homological::{angle, DivisorViolation};
use crate::opalg::DiagonalOperator;
use crate::regularize::Mode;
use crate::scalar::{Real, C};
use crate::spectral::{lnorm, Lattice};

/// Safety factor on the resonance locality bound `|j³ − k³| <= 8|ω̄·l|`.
pub const LOCALITY_FACTOR: f64 = 16.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MelnikovOrder {
    /// `|i ω·l + μ_j| >= γ<j>³<l>^{−τ}` for `(l, j) != (0, 0)`.
    First,
    /// `|i ω·l + μ_j − μ_k| >= γ|j³ − k³|<l>^{−τ}` for `j != k`.
    Second,
}

/// Uniform grid of `points` values on `[1/2, 3/2]`.
pub fn lambda_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..points).map(|i| 0.5 + i as f64 / (points - 1) as f64).collect(),
    }
}

/// First divisor at `ω = λ ω̄` below its bound, scanning `|l| <= N`.
///
/// With `locality = Some(c)` second-order pairs with `|j³ − k³| > c|ω̄·l|`
/// are skipped; `None` scans every pair.
pub fn melnikov_violation<T: Real>(
    eigs: &DiagonalOperator<T>,
    omega_bar: &[T],
    lambda: T,
    gamma: T,
    tau: T,
    n: usize,
    order: MelnikovOrder,
    locality: Option<f64>,
) -> Option<DivisorViolation> {
    let lat = Lattice::new(omega_bar.len(), n);
    let nx = eigs.n_x() as i64;
    for o in 0..lat.len() {
        let l = lat.point_vec(o);
        let wbar = l.iter().zip(omega_bar).fold(T::zero(), |s, (&a, &w)| s + T::int(a) * w);
        let wl = C::new(T::zero(), lambda * wbar);
        let decay = angle::<T>(&l).powf(tau);
        let zero_l = lnorm(&l) == 0;
        match order {
            MelnikovOrder::First => {
                for j in -nx..=nx {
                    if zero_l && j == 0 {
                        continue;
                    }
                    let jj = T::int(j.abs().max(1));
                    let bound = gamma * jj * jj * jj / decay;
                    let v = (wl + eigs.get(j)).norm();
                    if v < bound {
                        return Some(violation(&l, j, j, v, bound));
                    }
                }
            }
            MelnikovOrder::Second => {
                for j in -nx..=nx {
                    for k in -nx..=nx {
                        if j == k {
                            continue;
                        }
                        let cube = (j * j * j - k * k * k).abs();
                        if let Some(c) = locality {
                            if cube as f64 > c * wbar.abs().as_f64() {
                                continue;
                            }
                        }
                        let bound = gamma * T::int(cube) / decay;
                        let v = (wl + eigs.get(j) - eigs.get(k)).norm();
                        if v < bound {
                            return Some(violation(&l, j, k, v, bound));
                        }
                    }
                }
            }
        }
    }
    None
}

fn violation<T: Real>(l: &[i64], j: i64, k: i64, v: T, bound: T) -> DivisorViolation {
    DivisorViolation { l: l.to_vec(), j, k, value: v.as_f64(), bound: bound.as_f64() }
}

/// Accept/reject per λ of a table `λ -> μ(λ)`, evaluated in parallel.
pub fn melnikov_mask<T: Real>(
    table: &[(T, DiagonalOperator<T>)],
    omega_bar: &[T],
    gamma: T,
    tau: T,
    n: usize,
    order: MelnikovOrder,
) -> Vec<bool> {
    table
        .par_iter()
        .map(|(lambda, eigs)| {
            melnikov_violation(eigs, omega_bar, *lambda, gamma, tau, n, order, Some(LOCALITY_FACTOR)).is_none()
        })
        .collect()
}

/// Fraction of `true` entries.
pub fn mask_fraction(mask: &[bool]) -> f64 {
    if mask.is_empty() {
        return 0.0;
    }
    mask.iter().filter(|&&b| b).count() as f64 / mask.len() as f64
}

/// Summary of `μ_j^∞ = −i(m₃ j³ − m₁ j) + r_j^∞`.
#[derive(Clone, Debug, Serialize)]
pub struct EigenvalueReport {
    pub sup_rj: f64,
    pub sup_rj_over_eps: Option<f64>,
    pub max_re: f64,
    pub mu0_abs: f64,
    /// `max_j |μ_j + μ_{−j}|`, reported in reversible and Hamiltonian modes.
    pub antisymmetry_defect: Option<f64>,
    /// `max_j |μ_j − conj(μ_{−j})|`.
    pub reality_defect: f64,
    pub m3: f64,
    pub m1: f64,
}

pub fn eigenvalue_report<T: Real>(eigs: &DiagonalOperator<T>, m3: T, m1: T, epsilon: f64, mode: Mode, reversible: bool) -> EigenvalueReport {
    let base = DiagonalOperator::dispersive(eigs.n_x(), m3, m1);
    let nx = eigs.n_x() as i64;
    let sup_rj = eigs.mu().iter().zip(base.mu()).fold(0.0f64, |m, (a, b)| m.max((*a - *b).norm().as_f64()));
    let pairs = |f: &dyn Fn(C<T>, C<T>) -> T| (0..=nx).fold(0.0f64, |m, j| m.max(f(eigs.get(j), eigs.get(-j)).as_f64()));
    let antisymmetric = reversible || mode == Mode::Hamiltonian;
    EigenvalueReport {
        sup_rj,
        sup_rj_over_eps: (epsilon > 0.0).then(|| sup_rj / epsilon),
        max_re: eigs.max_abs_real_part().as_f64(),
        mu0_abs: eigs.get(0).norm().as_f64(),
        antisymmetry_defect: antisymmetric.then(|| pairs(&|a, b| (a + b).norm())),
        reality_defect: pairs(&|a, b| (a - b.conj()).norm()),
        m3: m3.as_f64(),
        m1: m1.as_f64(),
    }
}

/// Nearest-neighbour matching of a predicted against a computed spectrum.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumMatch {
    pub max_error: f64,
    /// Predicted values whose nearest computed value was already taken.
    pub collisions: usize,
    pub unmatched: usize,
}

/// Each predicted value is assigned its nearest computed value; a second
/// claim on the same computed value counts as a collision and falls back to
/// the nearest free one.
pub fn match_eigenvalues<T: Real>(predicted: &[C<T>], computed: &[C<T>]) -> SpectrumMatch {
    let mut taken = vec![false; computed.len()];
    let mut max_error = 0.0f64;
    let mut collisions = 0;
    let mut unmatched = 0;
    let nearest = |p: C<T>, free_only: bool, taken: &[bool]| {
        computed
            .iter()
            .enumerate()
            .filter(|(i, _)| !free_only || !taken[*i])
            .map(|(i, c)| (i, (*c - p).norm().as_f64()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    };
    for &p in predicted {
        let Some((i, d)) = nearest(p, false, &taken) else {
            unmatched += 1;
            continue;
        };
        let (i, d) = if taken[i] {
            collisions += 1;
            match nearest(p, true, &taken) {
                Some(x) => x,
                None => {
                    unmatched += 1;
                    continue;
                }
            }
        } else {
            (i, d)
        };
        taken[i] = true;
        max_error = max_error.max(d);
    }
    SpectrumMatch { max_error, collisions, unmatched }
}

//! The transformation chain at fixed angles and the comparison of direct
//! integration with the reduced flow.
//!
//! With `h(t) = A(ωt) q(t)`, `q(t) = r(ψ(t))`, `ψ(t) = t + α(ωt)` and
//! `r(τ) = W(ωτ) v(τ)`, `W = M T S Φ∞`, the reduced variable obeys
//! `∂_τ v + D∞ v = 0`.

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::flow::{integrate_with, norm_of, reduced_flow, PhaseState, VariablePart};
use crate::error::{Error, Result};
use crate::regularize::Mode;
use crate::scalar::{Real, C};
use crate::solver::Linearization;
use crate::spectral::{FourierField, Frequency};

const PSI_NEWTON_TOL: f64 = 1e-15;
const PSI_NEWTON_MAX_ITERS: usize = 50;
/// Relative size of `Re μ_j` tolerated as "purely imaginary".
const IMAGINARY_TOL: f64 = 1e-8;

/// `Σ_l f_{l,j} e^{i l·φ}` for `|j| <= n_x(f)`.
pub fn x_slice<T: Real>(f: &FourierField<T>, phi: &[T]) -> Vec<C<T>> {
    let tr = f.trunc();
    let lat = tr.lattice();
    let nj = tr.nj();
    let mut out = vec![C::zero(); nj];
    let mut l = vec![0i64; tr.nu];
    for li in 0..lat.len() {
        lat.point(li, &mut l);
        let th = l.iter().zip(phi).fold(T::zero(), |s, (&a, &p)| s + T::int(a) * p);
        let e = C::new(th.cos(), th.sin());
        for (jj, o) in out.iter_mut().enumerate() {
            *o = *o + f.coeffs()[li * nj + jj] * e;
        }
    }
    out
}

/// Value of a φ-only field.
fn phi_value<T: Real>(f: &FourierField<T>, phi: &[T]) -> T {
    x_slice(f, phi)[f.trunc().n_x].re
}

fn eval_x<T: Real>(c: &[C<T>], x: T, deriv: bool) -> T {
    let n = (c.len() / 2) as i64;
    c.iter().enumerate().fold(T::zero(), |s, (k, v)| {
        let j = T::int(k as i64 - n);
        let e = C::new((j * x).cos(), (j * x).sin());
        let term = if deriv { *v * e * C::new(T::zero(), j) } else { *v * e };
        s + term.re
    })
}

type Mat<T> = Vec<Vec<C<T>>>;

fn matvec<T: Real>(m: &Mat<T>, v: &[C<T>]) -> Vec<C<T>> {
    m.iter().map(|row| row.iter().zip(v).fold(C::zero(), |s, (a, b)| s + *a * *b)).collect()
}

/// Matrix of `h -> (1 + β_x)^{[ham]} h(x + β(x))` on `|j| <= n_x`, by
/// quadrature on a fine grid.
fn space_diffeo<T: Real>(beta: &[C<T>], n_x: usize, hamiltonian: bool) -> Mat<T> {
    let nb = beta.len() / 2;
    let m = (8 * (n_x + nb) + 1).next_power_of_two().max(64);
    let two_pi = T::PI() + T::PI();
    let xs: Vec<T> = (0..m).map(|k| two_pi * T::int(k as i64) / T::int(m as i64)).collect();
    let y: Vec<T> = xs.iter().map(|&x| x + eval_x(beta, x, false)).collect();
    let w: Vec<T> = xs
        .iter()
        .map(|&x| if hamiltonian { T::one() + eval_x(beta, x, true) } else { T::one() })
        .collect();
    let n = n_x as i64;
    let inv_m = T::one() / T::int(m as i64);
    (-n..=n)
        .map(|j| {
            (-n..=n)
                .map(|k| {
                    (0..m).fold(C::zero(), |s, i| {
                        let a = T::int(k) * y[i] - T::int(j) * xs[i];
                        s + C::new(a.cos(), a.sin()) * (w[i] * inv_m)
                    })
                })
                .collect()
        })
        .collect()
}

/// The chain evaluated at fixed angles.
pub struct FrozenChain<'a, T: Real> {
    lin: &'a Linearization<T>,
    hamiltonian: bool,
    n_x: usize,
}

impl<'a, T: Real> FrozenChain<'a, T> {
    pub fn new(lin: &'a Linearization<T>) -> Self {
        FrozenChain { lin, hamiltonian: lin.reg.mode == Mode::Hamiltonian, n_x: lin.reg.trunc().n_x }
    }

    /// `ψ(t) = t + α(ωt)`.
    pub fn psi(&self, freq: &Frequency<T>, t: T) -> T {
        t + phi_value(&self.lin.reg.chain.alpha, &phase(freq, t))
    }

    /// `ψ⁻¹(τ)` by scalar Newton; `ψ' = ρ(ωt) > 0`.
    pub fn psi_inv(&self, freq: &Frequency<T>, tau: T) -> Result<T> {
        let mut t = tau;
        for _ in 0..PSI_NEWTON_MAX_ITERS {
            let g = self.psi(freq, t) - tau;
            let dpsi = phi_value(&self.lin.reg.chain.rho, &phase(freq, t));
            if !(dpsi > T::zero()) {
                return Err(Error::DegenerateDiffeo { what: "rho", value: dpsi.as_f64() });
            }
            t = t - g / dpsi;
            if g.abs() <= T::lit(PSI_NEWTON_TOL) * (T::one() + tau.abs()) {
                return Ok(t);
            }
        }
        Err(Error::NoConvergence { what: "psi inverse", iterations: PSI_NEWTON_MAX_ITERS, residual: f64::NAN })
    }

    pub fn a(&self, phi: &[T]) -> Mat<T> {
        space_diffeo(&x_slice(&self.lin.reg.chain.beta, phi), self.n_x, self.hamiltonian)
    }

    pub fn a_inv(&self, phi: &[T]) -> Mat<T> {
        space_diffeo(&x_slice(&self.lin.reg.chain.beta_tilde, phi), self.n_x, self.hamiltonian)
    }

    /// `W(θ) = M T S Φ∞` applied to a state.
    pub fn apply_w(&self, theta: &[T], v: &[C<T>]) -> Vec<C<T>> {
        let c = &self.lin.reg.chain;
        let y = self.lin.red.phi_inf.frozen(theta).matvec(v).expect("state size");
        let y = self.lin.reg.s.frozen(theta).matvec(&y).expect("state size");
        let y = translate(&y, phi_value(&c.p, theta));
        multiply(&x_slice(&c.v, theta), &y)
    }

    /// `W(θ)⁻¹ = Φ∞⁻¹ S⁻¹ T⁻¹ M⁻¹`.
    pub fn apply_w_inv(&self, theta: &[T], h: &[C<T>]) -> Vec<C<T>> {
        let c = &self.lin.reg.chain;
        let y = multiply(&x_slice(&c.v_inv, theta), h);
        let y = translate(&y, -phi_value(&c.p, theta));
        let y = self.lin.reg.s_inv.frozen(theta).matvec(&y).expect("state size");
        self.lin.red.phi_inf_inv.frozen(theta).matvec(&y).expect("state size")
    }

    /// `v = W⁻¹(ωψ(t)) A⁻¹(ωt) h(t)`, stamped with `τ = ψ(t)`.
    pub fn to_reduced(&self, freq: &Frequency<T>, h: &PhaseState<T>) -> PhaseState<T> {
        let tau = self.psi(freq, h.t);
        let q = matvec(&self.a_inv(&phase(freq, h.t)), &h.h);
        PhaseState { h: self.apply_w_inv(&phase(freq, tau), &q), t: tau }
    }

    /// `h(t) = A(ωt) W(ωψ(t)) v(ψ(t))` for `v` stamped with `τ = ψ(t)`.
    pub fn from_reduced(&self, freq: &Frequency<T>, v: &PhaseState<T>, t: T) -> PhaseState<T> {
        let r = self.apply_w(&phase(freq, v.t), &v.h);
        PhaseState { h: matvec(&self.a(&phase(freq, t)), &r), t }
    }
}

fn phase<T: Real>(freq: &Frequency<T>, t: T) -> Vec<T> {
    freq.omega().iter().map(|&w| w * t).collect()
}

fn translate<T: Real>(h: &[C<T>], p: T) -> Vec<C<T>> {
    let n = (h.len() / 2) as i64;
    h.iter()
        .enumerate()
        .map(|(k, c)| {
            let a = T::int(k as i64 - n) * p;
            *c * C::new(a.cos(), a.sin())
        })
        .collect()
}

/// Product with a function given by its x-coefficients, truncated to `h`'s modes.
fn multiply<T: Real>(f: &[C<T>], h: &[C<T>]) -> Vec<C<T>> {
    let n = (h.len() / 2) as i64;
    let nf = (f.len() / 2) as i64;
    (-n..=n)
        .map(|j| {
            (-n..=n).fold(C::zero(), |s, k| {
                let d = j - k;
                if d.abs() > nf {
                    s
                } else {
                    s + f[(d + nf) as usize] * h[(k + n) as usize]
                }
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct StabilityConfig {
    pub t_end: f64,
    pub dt: f64,
    /// Sobolev index of the reported norms.
    pub s: f64,
    pub n_samples: usize,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig { t_end: 100.0, dt: 1e-3, s: 1.0, n_samples: 100 }
    }
}

/// One sample of the trajectory table.
#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub tau: f64,
    pub h_h1: f64,
    pub h_s: f64,
    pub v_s: f64,
    /// `‖h_direct(t) − h_reduced(t)‖_{H^s_x}/‖h(0)‖_{H^{s+1}_x}`.
    pub discrepancy: f64,
}

/// Largest measured `ℓ²` operator norms of the frozen chain.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ChainEnvelope {
    pub a: f64,
    pub a_inv: f64,
    pub w: f64,
    pub w_inv: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub rows: Vec<TrajectoryRow>,
    /// `max_t ‖h(t)‖_{H^s_x}/‖h(0)‖_{H^s_x}`.
    pub max_ratio: f64,
    pub min_ratio: f64,
    /// `max_t |‖v(t)‖ − ‖v(0)‖|/‖v(0)‖` in `H^s_x`.
    pub v_drift: f64,
    pub endpoint_discrepancy: f64,
    pub envelope: ChainEnvelope,
}

/// Integrates from `h0`, maps the trajectory to reduced variables and
/// compares with the pushforward of the exact reduced flow.
pub fn stability_report<T: Real>(
    lin: &Linearization<T>,
    coeffs: &[FourierField<T>; 4],
    freq: &Frequency<T>,
    h0: &PhaseState<T>,
    cfg: &StabilityConfig,
) -> Result<StabilityReport> {
    let eigs = &lin.red.eigs;
    let scale = eigs.mu().iter().fold(T::one(), |m, c| m.max(c.norm()));
    if eigs.max_abs_real_part() > T::lit(IMAGINARY_TOL) * scale {
        return Err(Error::Precondition(format!(
            "reduced eigenvalues are not purely imaginary: max |Re mu| = {:e}",
            eigs.max_abs_real_part().as_f64()
        )));
    }
    let var = VariablePart::new(coeffs, h0.n_x())?;
    let traj = integrate_with(&var, freq, h0, T::lit(cfg.t_end), T::lit(cfg.dt), cfg.n_samples)?;
    let chain = FrozenChain::new(lin);
    let s = cfg.s;
    let v0 = chain.to_reduced(freq, h0);
    let h0_s = h0.norm(s).as_f64();
    let h0_s1 = h0.norm(s + 1.0).as_f64();
    let v0_s = v0.norm(s).as_f64();
    let rows: Vec<(TrajectoryRow, ChainEnvelope)> = traj
        .par_iter()
        .map(|h| {
            let v = chain.to_reduced(freq, h);
            let pred_v = reduced_flow(eigs, &v0, v.t - v0.t);
            let pred_h = chain.from_reduced(freq, &pred_v, h.t);
            let d = h.distance(&pred_h, s).expect("same size").as_f64();
            let phi = phase(freq, h.t);
            let theta = phase(freq, v.t);
            let env = ChainEnvelope {
                a: op_norm(|x| matvec(&chain.a(&phi), x), h.h.len()),
                a_inv: op_norm(|x| matvec(&chain.a_inv(&phi), x), h.h.len()),
                w: op_norm(|x| chain.apply_w(&theta, x), h.h.len()),
                w_inv: op_norm(|x| chain.apply_w_inv(&theta, x), h.h.len()),
            };
            let row = TrajectoryRow {
                t: h.t.as_f64(),
                tau: v.t.as_f64(),
                h_h1: h.norm(1.0).as_f64(),
                h_s: h.norm(s).as_f64(),
                v_s: v.norm(s).as_f64(),
                discrepancy: d / h0_s1,
            };
            (row, env)
        })
        .collect();
    let mut envelope = ChainEnvelope::default();
    for (_, e) in &rows {
        envelope.a = envelope.a.max(e.a);
        envelope.a_inv = envelope.a_inv.max(e.a_inv);
        envelope.w = envelope.w.max(e.w);
        envelope.w_inv = envelope.w_inv.max(e.w_inv);
    }
    let rows: Vec<TrajectoryRow> = rows.into_iter().map(|(r, _)| r).collect();
    let ratios = rows.iter().map(|r| r.h_s / h0_s);
    let max_ratio = ratios.clone().fold(f64::MIN, f64::max);
    let min_ratio = ratios.fold(f64::MAX, f64::min);
    let v_drift = rows.iter().fold(0.0f64, |m, r| m.max((r.v_s - v0_s).abs() / v0_s));
    let endpoint_discrepancy = rows.last().map(|r| r.discrepancy).unwrap_or(0.0);
    Ok(StabilityReport { rows, max_ratio, min_ratio, v_drift, endpoint_discrepancy, envelope })
}

/// [`stability_report`] for several initial states in parallel.
pub fn stability_reports<T: Real>(
    lin: &Linearization<T>,
    coeffs: &[FourierField<T>; 4],
    freq: &Frequency<T>,
    h0s: &[PhaseState<T>],
    cfg: &StabilityConfig,
) -> Result<Vec<StabilityReport>> {
    h0s.par_iter().map(|h0| stability_report(lin, coeffs, freq, h0, cfg)).collect()
}

/// `ℓ²` norm by power iteration on `AᴴA` with a fixed start.
fn op_norm<T: Real>(apply: impl Fn(&[C<T>]) -> Vec<C<T>>, n: usize) -> f64 {
    // the adjoint is not available matrix-free, so the columns are formed once
    let cols: Vec<Vec<C<T>>> = (0..n)
        .map(|k| {
            let mut e = vec![C::zero(); n];
            e[k] = C::new(T::one(), T::zero());
            apply(&e)
        })
        .collect();
    let mut x: Vec<C<T>> = (0..n).map(|k| C::new(T::one() + T::int(k as i64) * T::lit(1e-3), T::zero())).collect();
    let mut sigma = 0.0;
    for _ in 0..30 {
        let ax: Vec<C<T>> = (0..n).map(|i| (0..n).fold(C::zero(), |s, k| s + cols[k][i] * x[k])).collect();
        let aha: Vec<C<T>> = (0..n).map(|k| cols[k].iter().zip(&ax).fold(C::zero(), |s, (a, b)| s + a.conj() * *b)).collect();
        let nrm = norm_of(&aha, 0.0);
        if nrm.is_zero() {
            return 0.0;
        }
        sigma = nrm.sqrt().as_f64() / norm_of(&x, 0.0).sqrt().as_f64();
        x = aha.into_iter().map(|c| c / nrm).collect();
    }
    sigma
}

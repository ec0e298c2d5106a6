//! Inversion of `L∞ = ω·∂_φ + D∞` and of the linearized operator through
//! `L⁻¹ = W₂ L∞⁻¹ W₁⁻¹`, `W_i = Φ_i Φ∞`.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kamreduce::Reduction;
use crate::opalg::DiagonalOperator;
use crate::regularize::RegularizationResult;
use crate::scalar::{Real, C};
use crate::spectral::{lnorm, s0, FourierField, Frequency};

/// Relative size of the `(0, 0)` mode tolerated by [`diag_inverse`].
pub const AVERAGE_TOL: f64 = 1e-10;

/// Class of right-hand sides the inverse is asked for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Admissible {
    /// `f ∈ Y`, solution in `X`.
    Reversible,
    /// `Π_C f = 0`.
    TotalDerivative,
}

/// `w_{lj} = g_{lj}/(i ω·l + μ_j)` for `(l, j) != (0, 0)`, `w_{00} = 0`.
///
/// Every divisor must satisfy `|i ω·l + μ_j| >= γ<j>³<l>^{−τ}`.
pub fn diag_inverse<T: Real>(
    eigs: &DiagonalOperator<T>,
    freq: &Frequency<T>,
    g: &FourierField<T>,
    gamma: T,
    tau: T,
) -> Result<FourierField<T>> {
    let trunc = *g.trunc();
    let scale = g.max_coeff().max(T::one());
    let avg = g.coeffs()[trunc.zero_index()];
    if avg.norm() > T::lit(AVERAGE_TOL) * scale {
        return Err(Error::NonzeroAverage(avg.norm().as_f64()));
    }
    let lat = trunc.lattice();
    let nx = trunc.n_x as i64;
    for o in 0..lat.len() {
        let l = lat.point_vec(o);
        let wl = C::new(T::zero(), freq.dot(&l));
        let decay = T::int(lnorm(&l).max(1)).powf(tau);
        for j in -nx..=nx {
            if j == 0 && lnorm(&l) == 0 {
                continue;
            }
            let jj = T::int(j.abs().max(1));
            let bound = gamma * jj * jj * jj / decay;
            let v = (wl + eigs.get(j)).norm();
            if v < bound || v.is_zero() {
                return Err(Error::SmallDivisor { l, j, value: v.as_f64(), bound: bound.as_f64() });
            }
        }
    }
    Ok(g.map_coeffs(|l, j, c| {
        if j == 0 && lnorm(l) == 0 {
            C::zero()
        } else {
            c / (C::new(T::zero(), freq.dot(l)) + eigs.get(j))
        }
    }))
}

/// Regularization and reduction of one linearized operator.
#[derive(Clone, Debug)]
pub struct Linearization<T: Real> {
    pub reg: RegularizationResult<T>,
    pub red: Reduction<T>,
}

/// Diagnostics of one right-inverse application.
#[derive(Clone, Debug, Serialize)]
pub struct InverseReport {
    /// `|Π_C W₁⁻¹ f|`, discarded by [`diag_inverse`].
    pub dropped_average: f64,
    /// `‖h − Π_X h‖_{s₀}` in the reversible case.
    pub parity_defect: f64,
}

impl<T: Real> Linearization<T> {
    /// `W₁⁻¹ f = Φ∞⁻¹ Φ₁⁻¹ f`.
    pub fn w1_inv(&self, f: &FourierField<T>) -> Result<FourierField<T>> {
        self.red.phi_inf_inv.apply(&self.reg.phi1_inv(f)?)
    }

    /// `W₂ w = Φ₂ Φ∞ w`.
    pub fn w2(&self, w: &FourierField<T>) -> Result<FourierField<T>> {
        self.reg.phi2(&self.red.phi_inf.apply(w)?)
    }

    /// `W₂⁻¹ h = Φ∞⁻¹ Φ₂⁻¹ h`.
    pub fn w2_inv(&self, h: &FourierField<T>) -> Result<FourierField<T>> {
        self.red.phi_inf_inv.apply(&self.reg.phi2_inv(h)?)
    }

    /// `W₁ g = Φ₁ Φ∞ g`.
    pub fn w1(&self, g: &FourierField<T>) -> Result<FourierField<T>> {
        self.reg.phi1(&self.red.phi_inf.apply(g)?)
    }
}

/// `h = W₂ L∞⁻¹ W₁⁻¹ f`, the solution with `c = 0` in the kernel direction
/// `W₂[1]`.
pub fn right_inverse<T: Real>(
    lin: &Linearization<T>,
    freq: &Frequency<T>,
    f: &FourierField<T>,
    class: Admissible,
    gamma: T,
    tau: T,
) -> Result<(FourierField<T>, InverseReport)> {
    let s = s0(f.trunc().nu);
    let fnorm = f.sobolev_norm(s);
    let tol = T::lit(AVERAGE_TOL) * fnorm.max(T::one());
    match class {
        Admissible::Reversible => {
            let wrong = f.even_part().sobolev_norm(s);
            if wrong > tol {
                return Err(Error::Precondition(format!("right-hand side not in Y: even part {:e}", wrong.as_f64())));
            }
        }
        Admissible::TotalDerivative => {
            if f.mean().abs() > tol {
                return Err(Error::Precondition(format!("right-hand side has mean {:e}", f.mean().as_f64())));
            }
        }
    }
    let g = lin.w1_inv(f)?;
    let dropped = g.coeffs()[g.trunc().zero_index()].norm();
    let w = diag_inverse(&lin.red.eigs, freq, &g, gamma, tau)?;
    let mut h = lin.w2(&w)?;
    let mut parity_defect = 0.0;
    if class == Admissible::Reversible {
        parity_defect = h.odd_part().sobolev_norm(s).as_f64();
        h = h.even_part();
    }
    Ok((h, InverseReport { dropped_average: dropped.as_f64(), parity_defect }))
}

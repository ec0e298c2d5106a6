//! The homological equation `ω·∂_φ Ψ + [D, Ψ] + Π_N R = [R]`.

use num_traits::Zero;
use serde::Serialize;

use crate::opalg::{DiagonalOperator, ToplitzOperator};
use crate::scalar::{Real, C};
use crate::spectral::{lnorm, Frequency};

/// Violations kept in a report.
const MAX_VIOLATIONS: usize = 16;

/// A divisor below its Melnikov bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivisorViolation {
    pub l: Vec<i64>,
    pub j: i64,
    pub k: i64,
    pub value: f64,
    pub bound: f64,
}

#[derive(Clone, Debug)]
pub struct HomologicalSolution<T: Real> {
    /// Zero when `ok` is false.
    pub psi: ToplitzOperator<T>,
    /// `[R] = diag_j R_j^j(0)`.
    pub diag_part: DiagonalOperator<T>,
    pub ok: bool,
    pub violations: Vec<DivisorViolation>,
}

/// `<l> = max(1, |l|)`.
pub(crate) fn angle<T: Real>(l: &[i64]) -> T {
    T::int(lnorm(l).max(1))
}

/// Lower bound required of `|δ_{ljk}|`: `γ|j³ − k³|<l>^{−τ}` off the
/// j-diagonal, and the Diophantine floor `γ₀<l>^{−τ₀}` of `ω` on it.
pub(crate) fn divisor_bound<T: Real>(freq: &Frequency<T>, l: &[i64], j: i64, k: i64, gamma: T, tau: T) -> T {
    if j == k {
        freq.gamma0() / angle::<T>(l).powf(freq.tau0())
    } else {
        gamma * T::int((j * j * j - k * k * k).abs()) / angle::<T>(l).powf(tau)
    }
}

/// `Ψ_j^k(l) = −R_j^k(l)/δ_{ljk}` with `δ_{ljk} = i ω·l + μ_j − μ_k` for
/// `|l| <= N`, `(j − k, l) != (0, 0)`; zero otherwise.
///
/// Divisors of the nonzero entries of `R` in that range are checked against
/// their Melnikov bounds; a single failure sets `ok = false` and no `Ψ` is
/// produced.
pub fn solve_homological<T: Real>(
    d: &DiagonalOperator<T>,
    r: &ToplitzOperator<T>,
    freq: &Frequency<T>,
    n: usize,
    gamma: T,
    tau: T,
) -> HomologicalSolution<T> {
    let trunc = *r.trunc();
    let diag_part = DiagonalOperator::new(trunc.n_x, r.diagonal_average()).expect("diagonal size");
    let mut violations = Vec::new();
    let mut count = 0usize;
    let mut psi = ToplitzOperator::zero(trunc);
    let off = trunc.offset_lattice();
    let nx = trunc.n_x as i64;
    for o in 0..off.len() {
        let l = off.point_vec(o);
        if lnorm(&l) as usize > n {
            continue;
        }
        let wl = C::new(T::zero(), freq.dot(&l));
        for j in -nx..=nx {
            for k in -nx..=nx {
                let rv = r.get(&l, j, k);
                if (j == k && lnorm(&l) == 0) || rv.is_zero() {
                    continue;
                }
                let delta = wl + d.get(j) - d.get(k);
                let bound = divisor_bound(freq, &l, j, k, gamma, tau);
                if delta.norm() < bound {
                    count += 1;
                    if violations.len() < MAX_VIOLATIONS {
                        violations.push(DivisorViolation {
                            l: l.clone(),
                            j,
                            k,
                            value: delta.norm().as_f64(),
                            bound: bound.as_f64(),
                        });
                    }
                    continue;
                }
                psi.set(&l, j, k, -rv / delta).expect("entry in range");
            }
        }
    }
    if count > 0 {
        return HomologicalSolution { psi: ToplitzOperator::zero(trunc), diag_part, ok: false, violations };
    }
    HomologicalSolution { psi, diag_part, ok: true, violations }
}

/// `ω·∂_φ Ψ + [D, Ψ] + Π_N R − [R]`.
pub fn homological_residual<T: Real>(
    d: &DiagonalOperator<T>,
    r: &ToplitzOperator<T>,
    psi: &ToplitzOperator<T>,
    freq: &Frequency<T>,
    n: usize,
) -> ToplitzOperator<T> {
    let trunc = *r.trunc();
    let bracket = ToplitzOperator::from_multiplier(trunc, |j| r.get(&vec![0; trunc.nu], j, j));
    psi.omega_dphi_commutator(freq)
        .add(&psi.left_diag(|j| d.get(j)).sub(&psi.right_diag(|j| d.get(j))).expect("same truncation"))
        .and_then(|a| a.add(&r.smooth(n)))
        .and_then(|a| a.sub(&bracket))
        .expect("same truncation")
}

/// Largest `|Ψ_j^k(l)|` where `Ψ` is not defined by the formula.
pub fn support_defect<T: Real>(psi: &ToplitzOperator<T>, n: usize) -> T {
    let trunc = *psi.trunc();
    let off = trunc.offset_lattice();
    let nx = trunc.n_x as i64;
    let mut worst = T::zero();
    for o in 0..off.len() {
        let l = off.point_vec(o);
        let outside = lnorm(&l) as usize > n;
        for j in -nx..=nx {
            for k in -nx..=nx {
                let v = psi.get(&l, j, k);
                if (outside || (j == k && lnorm(&l) == 0)) && !v.is_zero() {
                    worst = worst.max(v.norm());
                }
            }
        }
    }
    worst
}

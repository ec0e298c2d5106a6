//! The Nash-Moser iteration `u_{n+1} = u_n + h_{n+1}`,
//! `h_{n+1} = −Π_{n+1} L_n⁻¹ Π_{n+1} F(u_n)`.

use serde::{Deserialize, Serialize};

use super::inverse::{right_inverse, Admissible, Linearization};
use crate::error::{Error, Result};
use crate::kamreduce::{reduce, IterationSchedule};
use crate::nonlin::{residual, structure_flags, NonlinearitySpec};
use crate::opalg::DiagonalOperator;
use crate::regularize::{run_regularization, RegConfig};
use crate::scalar::Real;
use crate::spectral::{s0, FourierField, Frequency, Truncation};

/// Consecutive residual increases treated as divergence.
const DIVERGENCE_STEPS: usize = 2;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct NashMoserConfig {
    /// `N_n = round(N₀^{χ^n})`.
    pub n0: usize,
    pub chi: f64,
    /// Base `γ`; iterate `n` uses `γ_n = γ(1 + 2^{−n})`.
    pub gamma: f64,
    pub tau: f64,
    /// `None` means `1e−10 (1 + ‖F(0)‖_{s₀})`.
    pub tol_res: Option<f64>,
    pub max_iters: usize,
    /// Upper bound on `ε/γ`.
    pub smallness: f64,
    /// KAM schedule; its `γ` is replaced by `γ_n`.
    pub kam: IterationSchedule,
    pub reg: RegConfig,
}

impl Default for NashMoserConfig {
    fn default() -> Self {
        Self::for_nu(1)
    }
}

impl NashMoserConfig {
    pub fn for_nu(nu: usize) -> Self {
        let kam = IterationSchedule::for_nu(nu);
        NashMoserConfig {
            n0: 4,
            chi: 1.5,
            gamma: kam.gamma,
            tau: kam.tau,
            tol_res: None,
            max_iters: 12,
            smallness: 1.0,
            kam,
            reg: RegConfig::default(),
        }
    }

    /// `γ_n = γ(1 + 2^{−n})`.
    pub fn gamma_n(&self, n: usize) -> f64 {
        self.gamma * (1.0 + 0.5f64.powi(n.min(1000) as i32))
    }

    /// `N_n = round(N₀^{χ^n})`, saturated at `usize::MAX`.
    pub fn n_at(&self, n: usize) -> usize {
        let v = (self.n0 as f64).powf(self.chi.powi(n.min(64) as i32)).round();
        if v.is_finite() && v < usize::MAX as f64 {
            v as usize
        } else {
            usize::MAX
        }
    }
}

/// One row of the iteration log.
#[derive(Clone, Debug, Serialize)]
pub struct Iterate {
    pub n: usize,
    pub u_norm: f64,
    pub residual: f64,
    /// Radius of the projector that produced `u_n`.
    pub n_proj: usize,
    pub gamma_n: f64,
}

#[derive(Clone, Debug)]
pub struct SolveReport<T: Real> {
    pub iterates: Vec<Iterate>,
    pub solution: FourierField<T>,
    /// `μ_j^∞` at the last linearization.
    pub eigs: DiagonalOperator<T>,
    pub converged: bool,
    pub excluded_lambda: bool,
    /// Divisor that excluded `λ`.
    pub exclusion: Option<String>,
    pub tol_res: f64,
    pub class: Admissible,
    /// Linearization at the returned solution.
    pub linearization: Option<Linearization<T>>,
}

/// JSON-facing summary of a [`SolveReport`].
#[derive(Clone, Debug, Serialize)]
pub struct SolveSummary {
    pub lambda: f64,
    pub epsilon: f64,
    pub converged: bool,
    pub excluded: bool,
    pub exclusion: Option<String>,
    pub residual_history: Vec<f64>,
    pub order_estimate: Option<f64>,
    pub iterates: Vec<Iterate>,
    pub sup_rj: Option<f64>,
    pub re_mu_max: f64,
    pub m3: Option<f64>,
    pub m1: Option<f64>,
    pub solution_norm: f64,
    pub solution_ref: Option<String>,
}

impl<T: Real> SolveReport<T> {
    pub fn residuals(&self) -> Vec<f64> {
        self.iterates.iter().map(|it| it.residual).collect()
    }

    /// `p̂ = log(r_{n+1}/r_n)/log(r_n/r_{n−1})` over the last three residuals.
    pub fn order_estimate(&self) -> Option<f64> {
        order_estimate(&self.residuals())
    }

    pub fn summary(&self, freq: &Frequency<T>, epsilon: f64) -> SolveSummary {
        let s = s0(self.solution.trunc().nu);
        let lin = self.linearization.as_ref();
        SolveSummary {
            lambda: freq.lambda().as_f64(),
            epsilon,
            converged: self.converged,
            excluded: self.excluded_lambda,
            exclusion: self.exclusion.clone(),
            residual_history: self.residuals(),
            order_estimate: self.order_estimate(),
            iterates: self.iterates.clone(),
            sup_rj: lin.map(|l| l.red.sup_rj().as_f64()),
            re_mu_max: self.eigs.max_abs_real_part().as_f64(),
            m3: lin.map(|l| l.reg.m3.as_f64()),
            m1: lin.map(|l| l.reg.m1.as_f64()),
            solution_norm: self.solution.sobolev_norm(s).as_f64(),
            solution_ref: None,
        }
    }
}

/// See [`SolveReport::order_estimate`].
pub fn order_estimate(r: &[f64]) -> Option<f64> {
    let n = r.len();
    if n < 3 {
        return None;
    }
    let (a, b, c) = (r[n - 3], r[n - 2], r[n - 1]);
    if !(a > 0.0 && b > 0.0 && c > 0.0) || a == b {
        return None;
    }
    Some((c / b).ln() / (b / a).ln())
}

/// Structural class of `F`, or the obstruction when neither holds.
pub fn admissible_class(spec: &NonlinearitySpec) -> Result<Admissible> {
    let flags = structure_flags(spec);
    if flags.reversible {
        Ok(Admissible::Reversible)
    } else if flags.total_derivative {
        Ok(Admissible::TotalDerivative)
    } else {
        Err(Error::Precondition(format!(
            "f is neither a total x-derivative nor reversible: projecting F(u) = 0 on the (0,0) mode leaves the \
             equation eps*m = 0 with m the space-time average of f, which has no solution for eps != 0 ({})",
            flags.diagnostics.join("; ")
        )))
    }
}

/// Regularizes and reduces the linearized operator at `u` with Melnikov
/// constant `gamma`.
pub fn linearize<T: Real>(
    spec: &NonlinearitySpec,
    freq: &Frequency<T>,
    u: &FourierField<T>,
    cfg: &NashMoserConfig,
    gamma: f64,
) -> Result<Linearization<T>> {
    let reg = run_regularization(spec, freq, u, &cfg.reg)?;
    let schedule = IterationSchedule { gamma, ..cfg.kam.clone() };
    let red = reduce(&reg, freq, &schedule)?;
    Ok(Linearization { reg, red })
}

/// Newton iteration from `u₀ = 0` on `trunc`.
///
/// A Melnikov failure at some iterate ends the run with
/// `excluded_lambda = true`; it is not an error.
pub fn nash_moser<T: Real>(
    spec: &NonlinearitySpec,
    freq: &Frequency<T>,
    trunc: Truncation,
    cfg: &NashMoserConfig,
) -> Result<SolveReport<T>> {
    let class = admissible_class(spec)?;
    if cfg.gamma <= 0.0 || spec.epsilon().abs() / cfg.gamma > cfg.smallness {
        return Err(Error::Precondition(format!(
            "eps/gamma = {:e} exceeds the smallness threshold {}",
            spec.epsilon().abs() / cfg.gamma,
            cfg.smallness
        )));
    }
    let s = s0(trunc.nu);
    let mut u = FourierField::zeros(trunc);
    let mut f = residual(spec, freq, &u)?;
    let r0 = f.sobolev_norm(s).as_f64();
    let tol_res = cfg.tol_res.unwrap_or(1e-10 * (1.0 + r0));
    let mut iterates = vec![Iterate { n: 0, u_norm: 0.0, residual: r0, n_proj: 0, gamma_n: cfg.gamma_n(0) }];
    let mut report = SolveReport {
        iterates: Vec::new(),
        solution: u.clone(),
        eigs: DiagonalOperator::dispersive(trunc.n_x, T::one(), T::zero()),
        converged: false,
        excluded_lambda: false,
        exclusion: None,
        tol_res,
        class,
        linearization: None,
    };
    let mut rising = 0usize;
    let mut n = 0usize;
    let mut res = r0;
    let mut last_gamma = cfg.gamma_n(0);
    while res >= tol_res && n < cfg.max_iters {
        let gamma_n = cfg.gamma_n(n);
        last_gamma = gamma_n;
        let step = linearize(spec, freq, &u, cfg, gamma_n).and_then(|lin| {
            let n_next = cfg.n_at(n + 1);
            let rhs = f.project_ball(n_next);
            let (h, _) = right_inverse(&lin, freq, &rhs, class, T::lit(gamma_n), T::lit(cfg.tau))?;
            Ok((lin, h.project_ball(n_next), n_next))
        });
        let (lin, h, n_next) = match step {
            Ok(v) => v,
            Err(e) if e.is_exclusion() => {
                report.excluded_lambda = true;
                report.exclusion = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        report.eigs = lin.red.eigs.clone();
        u = u.sub(&h)?;
        if class == Admissible::Reversible {
            u = u.even_part();
        }
        f = residual(spec, freq, &u)?;
        let next = f.sobolev_norm(s).as_f64();
        n += 1;
        iterates.push(Iterate { n, u_norm: u.sobolev_norm(s).as_f64(), residual: next, n_proj: n_next, gamma_n });
        if !next.is_finite() {
            return Err(Error::Divergence(n));
        }
        if next >= res {
            rising += 1;
            if rising >= DIVERGENCE_STEPS {
                return Err(Error::Divergence(n));
            }
        } else {
            rising = 0;
        }
        res = next;
    }
    report.iterates = iterates;
    report.solution = u;
    report.converged = !report.excluded_lambda && res < tol_res;
    if report.converged {
        match linearize(spec, freq, &report.solution, cfg, last_gamma) {
            Ok(lin) => {
                report.eigs = lin.red.eigs.clone();
                report.linearization = Some(lin);
            }
            Err(e) if e.is_exclusion() => {
                report.converged = false;
                report.excluded_lambda = true;
                report.exclusion = Some(e.to_string());
            }
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

//! KAM iteration `L_ν = ω·∂_φ + D_ν + R_ν -> L_{ν+1} = Φ_ν⁻¹ L_ν Φ_ν`.

use serde::{Deserialize, Serialize};

use super::homological::{solve_homological, DivisorViolation};
use crate::error::{Error, Result};
use crate::opalg::{DiagonalOperator, ToplitzOperator};
use crate::regularize::{Mode, RegularizationResult};
use crate::scalar::{Real, C};
use crate::spectral::{s0, FourierField, Frequency};

/// Tolerance of the Neumann inversions of `Φ_ν = I + Ψ_ν`.
const NEUMANN_TOL: f64 = 1e-16;
/// Steps without decrease of `|R_ν|_{s₀}` before giving up.
const STAGNATION_STEPS: usize = 3;

/// `N_ν = round(N₀^{χ^ν})`, the Melnikov constants and stopping rules.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IterationSchedule {
    pub n0: usize,
    pub chi: f64,
    pub gamma: f64,
    pub tau: f64,
    pub max_steps: usize,
    pub target_decay: f64,
    /// Upper bound on `|R₀|_{s₀}/γ` accepted by [`reduce`].
    pub smallness: f64,
    /// Extra weight of the second logged decay norm.
    pub beta_report: f64,
}

impl Default for IterationSchedule {
    fn default() -> Self {
        Self::for_nu(1)
    }
}

impl IterationSchedule {
    /// Defaults with `τ = ν + 2`.
    pub fn for_nu(nu: usize) -> Self {
        IterationSchedule {
            n0: 4,
            chi: 1.5,
            gamma: 0.05,
            tau: nu as f64 + 2.0,
            max_steps: 12,
            target_decay: 1e-10,
            smallness: 1.0,
            beta_report: 2.0,
        }
    }

    /// `N_ν` capped at `2 n_phi`, beyond which `Π_N^⊥ R = 0`.
    pub fn n_at(&self, step: usize, n_phi: usize) -> usize {
        let cap = 2 * n_phi;
        let v = (self.n0 as f64).powf(self.chi.powi(step.min(64) as i32)).round();
        if v.is_finite() && v < cap as f64 {
            v as usize
        } else {
            cap
        }
    }

    /// `|R₀|_{s₀} N₀^{2τ+1}/γ`.
    pub fn smallness_surrogate(&self, r0_norm: f64) -> f64 {
        r0_norm * (self.n0 as f64).powf(2.0 * self.tau + 1.0) / self.gamma
    }
}

/// Per-step diagnostics, one row of the trace.
#[derive(Clone, Debug, Serialize)]
pub struct StepTrace {
    pub step: usize,
    pub n: usize,
    /// `|R_ν|_{s₀}` before the step.
    pub r_norm: f64,
    /// `|R_ν|_{s₀+β}`.
    pub r_norm_high: f64,
    pub psi_norm: f64,
    /// `sup_j |r_j^ν|` after the step.
    pub sup_rj: f64,
    pub psi_reality_defect: f64,
    pub psi_reversibility_defect: f64,
    pub mask_fraction: Option<f64>,
}

/// `L_ν = ω·∂_φ + D_ν + R_ν` together with `Φ̃_ν = Φ₀ ∘ … ∘ Φ_{ν−1}`.
#[derive(Clone, Debug)]
pub struct ReducibilityState<T: Real> {
    pub step: usize,
    pub d: DiagonalOperator<T>,
    /// `μ_j⁰ = −i(m₃ j³ − m₁ j)`.
    pub d0: DiagonalOperator<T>,
    pub r: ToplitzOperator<T>,
    pub phi_acc: ToplitzOperator<T>,
    pub phi_acc_inv: ToplitzOperator<T>,
    pub schedule: IterationSchedule,
    /// `Φ_ν = exp(Ψ_ν)` instead of `I + Ψ_ν`.
    pub symplectic: bool,
    /// Divisors passed at every step so far.
    pub mask: bool,
    pub violations: Vec<DivisorViolation>,
}

impl<T: Real> ReducibilityState<T> {
    pub fn new(d: DiagonalOperator<T>, r: ToplitzOperator<T>, schedule: IterationSchedule, symplectic: bool) -> Self {
        let id = ToplitzOperator::identity(*r.trunc());
        ReducibilityState {
            step: 0,
            d0: d.clone(),
            d,
            r,
            phi_acc: id.clone(),
            phi_acc_inv: id,
            schedule,
            symplectic,
            mask: true,
            violations: Vec::new(),
        }
    }

    pub fn r_norm(&self) -> T {
        self.r.decay_norm(s0(self.r.trunc().nu))
    }

    /// `sup_j |μ_j^ν − μ_j⁰|`.
    pub fn sup_rj(&self) -> T {
        sup_diff(&self.d, &self.d0)
    }
}

fn sup_diff<T: Real>(a: &DiagonalOperator<T>, b: &DiagonalOperator<T>) -> T {
    a.mu().iter().zip(b.mu()).fold(T::zero(), |m, (x, y)| m.max((*x - *y).norm()))
}

/// One step: solves the homological equation with `N = N_ν` and conjugates.
///
/// A divisor violation returns the state with `mask = false` and no update;
/// `|Ψ|_{s₀} >= 1/2` is a contraction error.
pub fn kam_step<T: Real>(state: &ReducibilityState<T>, freq: &Frequency<T>) -> Result<(ReducibilityState<T>, StepTrace)> {
    let trunc = *state.r.trunc();
    let s = s0(trunc.nu);
    let sch = &state.schedule;
    let n = sch.n_at(state.step, trunc.n_phi);
    let r_norm = state.r.decay_norm(s).as_f64();
    let r_norm_high = state.r.decay_norm(s + sch.beta_report).as_f64();
    let sol = solve_homological(&state.d, &state.r, freq, n, T::lit(sch.gamma), T::lit(sch.tau));
    let mut trace = StepTrace {
        step: state.step,
        n,
        r_norm,
        r_norm_high,
        psi_norm: 0.0,
        sup_rj: state.sup_rj().as_f64(),
        psi_reality_defect: 0.0,
        psi_reversibility_defect: 0.0,
        mask_fraction: None,
    };
    if !sol.ok {
        let mut out = state.clone();
        out.mask = false;
        out.violations = sol.violations;
        return Ok((out, trace));
    }
    let psi = sol.psi;
    let psi_norm = psi.decay_norm(s);
    trace.psi_norm = psi_norm.as_f64();
    trace.psi_reality_defect = psi.reality_defect().as_f64();
    trace.psi_reversibility_defect = psi.reversibility_preserving_defect().as_f64();
    if psi_norm >= T::lit(0.5) {
        return Err(Error::Contraction { what: "KAM step", norm: psi_norm.as_f64(), bound: 0.5 });
    }
    let id = ToplitzOperator::identity(trunc);
    let d_new = state.d.add(&sol.diag_part)?;
    let bracket = sol.diag_part.to_toeplitz(trunc)?;
    let (phi, phi_inv, r_new) = if state.symplectic {
        let phi = psi.exp()?;
        let phi_inv = psi.scale(-T::one()).exp()?;
        // Φ⁻¹([ω·∂_φ, Φ] + [D, Φ] + R Φ) − [R]
        let mu = |j: i64| state.d.get(j);
        let comm = phi
            .omega_dphi_commutator(freq)
            .add(&phi.left_diag(mu).sub(&phi.right_diag(mu))?)?
            .add(&state.r.compose(&phi)?)?;
        let r_new = phi_inv.compose(&comm)?.sub(&bracket)?;
        (phi, phi_inv, r_new)
    } else {
        let phi = id.add(&psi)?;
        let phi_inv = psi.neumann_inverse(NEUMANN_TOL)?;
        let perp = state.r.sub(&state.r.smooth(n))?;
        let inner = perp.add(&state.r.compose(&psi)?)?.sub(&psi.compose(&bracket)?)?;
        (phi, phi_inv.clone(), phi_inv.compose(&inner)?)
    };
    let out = ReducibilityState {
        step: state.step + 1,
        d: d_new,
        d0: state.d0.clone(),
        r: r_new,
        phi_acc: state.phi_acc.compose(&phi)?,
        phi_acc_inv: phi_inv.compose(&state.phi_acc_inv)?,
        schedule: state.schedule.clone(),
        symplectic: state.symplectic,
        mask: true,
        violations: Vec::new(),
    };
    trace.sup_rj = out.sup_rj().as_f64();
    Ok((out, trace))
}

/// Outcome of the reduction of `L₅ = ω·∂_φ + D₀ + R₀`.
#[derive(Clone, Debug)]
pub struct Reduction<T: Real> {
    /// `μ_j^∞`.
    pub eigs: DiagonalOperator<T>,
    pub d0: DiagonalOperator<T>,
    pub r0: ToplitzOperator<T>,
    /// Remainder left after the last step.
    pub r_final: ToplitzOperator<T>,
    pub phi_inf: ToplitzOperator<T>,
    pub phi_inf_inv: ToplitzOperator<T>,
    pub trace: Vec<StepTrace>,
    pub steps: usize,
    pub converged: bool,
    /// `|R₀|_{s₀} N₀^{2τ+1}/γ`, logged only.
    pub smallness_surrogate: f64,
}

impl<T: Real> Reduction<T> {
    /// `sup_j |r_j^∞|`.
    pub fn sup_rj(&self) -> T {
        sup_diff(&self.eigs, &self.d0)
    }

    /// `(ω·∂_φ + D∞) z`.
    pub fn apply_l_inf(&self, freq: &Frequency<T>, z: &FourierField<T>) -> Result<FourierField<T>> {
        z.omega_dphi(freq).add(&self.eigs.apply(z)?)
    }

    /// `(ω·∂_φ + D₀ + R₀) z`.
    pub fn apply_l5(&self, freq: &Frequency<T>, z: &FourierField<T>) -> Result<FourierField<T>> {
        z.omega_dphi(freq).add(&self.d0.apply(z)?)?.add(&self.r0.apply(z)?)
    }

    /// `‖L₅ Φ∞ z − Φ∞ L∞ z‖_{s₀}`.
    pub fn conjugation_residual(&self, freq: &Frequency<T>, z: &FourierField<T>) -> Result<T> {
        let lhs = self.apply_l5(freq, &self.phi_inf.apply(z)?)?;
        let rhs = self.phi_inf.apply(&self.apply_l_inf(freq, z)?)?;
        lhs.distance(&rhs, s0(z.trunc().nu))
    }

    /// Predicted spectrum `{i ω·l + μ_j^∞}` over the field lattice.
    pub fn predicted_spectrum(&self, freq: &Frequency<T>) -> Vec<C<T>> {
        let trunc = *self.r0.trunc();
        let lat = trunc.lattice();
        let nx = trunc.n_x as i64;
        let mut out = Vec::with_capacity(trunc.len());
        for o in 0..lat.len() {
            let w = freq.dot(&lat.point_vec(o));
            for j in -nx..=nx {
                out.push(C::new(T::zero(), w) + self.eigs.get(j));
            }
        }
        out
    }
}

/// Iterates [`kam_step`] on `ω·∂_φ + D₀ + R₀` until `|R_ν|_{s₀}` drops below
/// the target or `max_steps` is reached.
pub fn reduce_operator<T: Real>(
    d0: DiagonalOperator<T>,
    r0: ToplitzOperator<T>,
    freq: &Frequency<T>,
    schedule: &IterationSchedule,
    symplectic: bool,
) -> Result<Reduction<T>> {
    let mut state = ReducibilityState::new(d0.clone(), r0.clone(), schedule.clone(), symplectic);
    let r0_norm = state.r_norm().as_f64();
    if r0_norm / schedule.gamma > schedule.smallness {
        return Err(Error::Precondition(format!(
            "|R0|/gamma = {:e} exceeds the smallness threshold {}",
            r0_norm / schedule.gamma,
            schedule.smallness
        )));
    }
    let mut trace = Vec::new();
    let mut best = r0_norm;
    let mut stalled = 0usize;
    let mut converged = r0_norm < schedule.target_decay;
    while !converged && state.step < schedule.max_steps {
        let (next, row) = kam_step(&state, freq)?;
        trace.push(row);
        if !next.mask {
            let v = next.violations.first().map(|v| format!("{v:?}")).unwrap_or_default();
            return Err(Error::Excluded(format!("divisor below its bound at KAM step {}: {v}", state.step)));
        }
        state = next;
        let norm = state.r_norm().as_f64();
        if norm < best {
            best = norm;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= STAGNATION_STEPS {
                return Err(Error::Stagnation(state.step));
            }
        }
        converged = norm < schedule.target_decay;
    }
    Ok(Reduction {
        eigs: state.d.clone(),
        d0,
        r0,
        r_final: state.r.clone(),
        phi_inf: state.phi_acc,
        phi_inf_inv: state.phi_acc_inv,
        trace,
        steps: state.step,
        converged,
        smallness_surrogate: schedule.smallness_surrogate(r0_norm),
    })
}

/// Reduces the output of the regularization; symplectic steps in
/// Hamiltonian mode.
pub fn reduce<T: Real>(reg: &RegularizationResult<T>, freq: &Frequency<T>, schedule: &IterationSchedule) -> Result<Reduction<T>> {
    let trunc = *reg.trunc();
    let d0 = DiagonalOperator::dispersive(trunc.n_x, reg.m3, reg.m1);
    reduce_operator(d0, reg.r.clone(), freq, schedule, reg.mode == Mode::Hamiltonian)
}

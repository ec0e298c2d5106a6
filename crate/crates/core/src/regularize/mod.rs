//! Conjugation of the linearized operator
//! `L = ω·∂_φ + (1 + a₃)∂_xxx + a₂∂_xx + a₁∂_x + a₀` to
//! `L₅ = ω·∂_φ + m₃∂_xxx + m₁∂_x + R` with constants `m₃, m₁` and a
//! remainder `R` of order zero, through `L = Φ₁ L₅ Φ₂⁻¹` with
//! `Φ₁ = A B ρ M T S` and `Φ₂ = A B M T S`.

mod steps;

use serde::{Deserialize, Serialize};

pub use steps::{
    max_x_variance, step1_space_diffeo, step2_time_reparam, step3_descent_zero, step3_skipped, step4_translation,
    step5_pseudo_diff, Step1, Step2, Step3, Step4, Step5, StepDiagnostic,
};

use crate::error::{Error, Result};
use crate::nonlin::{structure_flags, LinearizedOperator, NonlinearitySpec, StructureFlags};
use crate::opalg::ToplitzOperator;
use crate::scalar::Real;
use crate::spectral::{compose, s0, translate_x, DiffeoKind, FourierField, Frequency, Truncation};

type F<T> = FourierField<T>;

/// Which variant of the chain is used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Hypothesis (Q) holds.
    GenericQ,
    /// Hypothesis (F) holds.
    FullyNonlinearF,
    /// Symplectic changes of variables; the multiplication step is skipped.
    Hamiltonian,
}

impl Mode {
    /// Mode admitted by the structure flags.
    pub fn from_flags(flags: &StructureFlags) -> Result<Mode> {
        if flags.hamiltonian {
            Ok(Mode::Hamiltonian)
        } else if flags.cond_f {
            Ok(Mode::FullyNonlinearF)
        } else if flags.cond_q {
            Ok(Mode::GenericQ)
        } else {
            Err(Error::Precondition(format!(
                "neither (F) nor (Q) holds and the nonlinearity is not Hamiltonian: {}",
                flags.diagnostics.join("; ")
            )))
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegConfig {
    /// Coefficients are carried with `k` times the operator's modes.
    pub coeff_widen: usize,
    /// Threshold on the φ-wise x-mean of `c₂`.
    pub zero_mean_tol: f64,
    pub neumann_tol: f64,
}

impl Default for RegConfig {
    fn default() -> Self {
        RegConfig { coeff_widen: 2, zero_mean_tol: 1e-9, neumann_tol: 1e-15 }
    }
}

/// Intermediate functions of the chain.
#[derive(Clone, Debug)]
pub struct Chain<T: Real> {
    pub b: F<T>,
    pub beta: F<T>,
    pub beta_tilde: F<T>,
    /// `[b₀, b₁, b₂, b₃]`.
    pub b_coeffs: [F<T>; 4],
    pub alpha: F<T>,
    pub alpha_tilde: F<T>,
    pub rho: F<T>,
    /// `[c₀, c₁, c₂]`.
    pub c: [F<T>; 3],
    pub v: F<T>,
    pub v_inv: F<T>,
    /// `[d₀, d₁]`.
    pub d: [F<T>; 2],
    pub p: F<T>,
    /// `[e₀, e₁]`.
    pub e: [F<T>; 2],
    pub w: F<T>,
}

/// Measured identities of the chain.
#[derive(Clone, Debug, Serialize)]
pub struct RegChecks {
    /// Largest x-variance of the `∂_yyy` coefficient after Step 1.
    pub b3_variance: f64,
    /// `‖b₂‖_{s₀}` (vanishes in the Hamiltonian mode).
    pub b2_norm: f64,
    /// Largest φ-wise x-mean of `c₂`.
    pub c2_mean: f64,
    /// `‖∂_yy coefficient‖_{s₀}` after Step 3.
    pub t2_norm: f64,
    /// `sup_θ |avg_x e₁ − m₁|`.
    pub e1_defect: f64,
    /// `max |r₁|`.
    pub r1_max: f64,
    /// `|R|_{s₀}`.
    pub r_norm: f64,
    pub steps: Vec<StepDiagnostic>,
}

/// The conjugated operator together with the transformations.
#[derive(Clone, Debug)]
pub struct RegularizationResult<T: Real> {
    pub mode: Mode,
    pub m3: T,
    pub m1: T,
    pub r: ToplitzOperator<T>,
    pub s: ToplitzOperator<T>,
    pub s_inv: ToplitzOperator<T>,
    pub chain: Chain<T>,
    pub checks: RegChecks,
    freq: Frequency<T>,
    trunc: Truncation,
}

impl<T: Real> RegularizationResult<T> {
    pub fn freq(&self) -> &Frequency<T> {
        &self.freq
    }

    /// Operator truncation of `R` and of the probe fields.
    pub fn trunc(&self) -> &Truncation {
        &self.trunc
    }

    fn hamiltonian(&self) -> bool {
        self.mode == Mode::Hamiltonian
    }

    /// `A h`: `h(φ, x + β)`, times `1 + β_x` in the Hamiltonian mode.
    pub fn apply_a(&self, h: &F<T>) -> Result<F<T>> {
        let out = compose(DiffeoKind::Space, h, &self.chain.beta, &self.freq)?;
        if self.hamiltonian() {
            out.mul(&self.chain.beta.dx_pow(1).add_constant(T::one()))
        } else {
            Ok(out)
        }
    }

    pub fn apply_a_inv(&self, h: &F<T>) -> Result<F<T>> {
        let out = compose(DiffeoKind::Space, h, &self.chain.beta_tilde, &self.freq)?;
        if self.hamiltonian() {
            out.mul(&self.chain.beta_tilde.dx_pow(1).add_constant(T::one()))
        } else {
            Ok(out)
        }
    }

    /// `B h = h(φ + ω α(φ), y)`.
    pub fn apply_b(&self, h: &F<T>) -> Result<F<T>> {
        compose(DiffeoKind::Time, h, &self.chain.alpha, &self.freq)
    }

    pub fn apply_b_inv(&self, h: &F<T>) -> Result<F<T>> {
        compose(DiffeoKind::Time, h, &self.chain.alpha_tilde, &self.freq)
    }

    pub fn apply_rho(&self, h: &F<T>) -> Result<F<T>> {
        h.mul(&self.chain.rho)
    }

    pub fn apply_m(&self, h: &F<T>) -> Result<F<T>> {
        h.mul(&self.chain.v)
    }

    pub fn apply_m_inv(&self, h: &F<T>) -> Result<F<T>> {
        h.mul(&self.chain.v_inv)
    }

    /// `T h = h(θ, y + p(θ))`.
    pub fn apply_t(&self, h: &F<T>) -> Result<F<T>> {
        translate_x(h, &self.chain.p)
    }

    pub fn apply_t_inv(&self, h: &F<T>) -> Result<F<T>> {
        translate_x(h, &self.chain.p.scale(-T::one()))
    }

    pub fn apply_s(&self, h: &F<T>) -> Result<F<T>> {
        self.s.apply(h)
    }

    pub fn apply_s_inv(&self, h: &F<T>) -> Result<F<T>> {
        self.s_inv.apply(h)
    }

    /// `Φ₁ z = A B ρ M T S z`.
    pub fn phi1(&self, z: &F<T>) -> Result<F<T>> {
        let y = self.apply_m(&self.apply_t(&self.apply_s(z)?)?)?;
        self.apply_a(&self.apply_b(&self.apply_rho(&y)?)?)
    }

    /// `Φ₂ z = A B M T S z`.
    pub fn phi2(&self, z: &F<T>) -> Result<F<T>> {
        let y = self.apply_m(&self.apply_t(&self.apply_s(z)?)?)?;
        self.apply_a(&self.apply_b(&y)?)
    }

    pub fn phi1_inv(&self, h: &F<T>) -> Result<F<T>> {
        let y = self.apply_b_inv(&self.apply_a_inv(h)?)?.div(&self.chain.rho)?;
        self.apply_s_inv(&self.apply_t_inv(&self.apply_m_inv(&y)?)?)
    }

    pub fn phi2_inv(&self, h: &F<T>) -> Result<F<T>> {
        let y = self.apply_b_inv(&self.apply_a_inv(h)?)?;
        self.apply_s_inv(&self.apply_t_inv(&self.apply_m_inv(&y)?)?)
    }

    /// `L₅ z = ω·∂_φ z + m₃ z_xxx + m₁ z_x + R z`.
    pub fn apply_l5(&self, z: &F<T>) -> Result<F<T>> {
        z.omega_dphi(&self.freq)
            .add(&z.dx_pow(3).scale(self.m3))?
            .add(&z.dx_pow(1).scale(self.m1))?
            .add(&self.r.apply(z)?)
    }

    /// `‖L Φ₂ z − Φ₁ L₅ z‖_{s₀}`.
    pub fn conjugacy_residual(&self, lin: &LinearizedOperator<T>, z: &F<T>) -> Result<T> {
        let lhs = lin.apply(&self.phi2(z)?)?;
        let rhs = self.phi1(&self.apply_l5(z)?)?;
        lhs.distance(&rhs, s0(z.trunc().nu))
    }

    /// Parity defects of the chain in the reversible case, where `β, α, p`
    /// and `w` are odd and `v, ρ` even: the `‖·‖_{s₀}` norm of the part of
    /// the wrong parity.
    pub fn parity_defects(&self) -> Vec<(&'static str, f64)> {
        let c = &self.chain;
        let s = s0(self.trunc.nu);
        [
            ("beta", &c.beta, true),
            ("alpha", &c.alpha, true),
            ("p", &c.p, true),
            ("w", &c.w, true),
            ("v", &c.v, false),
            ("rho", &c.rho, false),
        ]
        .into_iter()
        .map(|(name, f, odd)| {
            let wrong = if odd { f.even_part() } else { f.odd_part() };
            (name, wrong.sobolev_norm(s).as_f64())
        })
        .collect()
    }
}

/// Runs Steps 1-5 on `L(u)` with `R` on `u`'s truncation.
pub fn run_regularization<T: Real>(
    spec: &NonlinearitySpec,
    freq: &Frequency<T>,
    u: &F<T>,
    cfg: &RegConfig,
) -> Result<RegularizationResult<T>> {
    let mode = Mode::from_flags(&structure_flags(spec))?;
    let trunc = *u.trunc();
    let lin = LinearizedOperator::at(spec, freq, u, &trunc.widened(cfg.coeff_widen))?;
    regularize_operator(&lin, mode, trunc, cfg)
}

/// Runs Steps 1-5 on a given linearized operator.
pub fn regularize_operator<T: Real>(
    lin: &LinearizedOperator<T>,
    mode: Mode,
    trunc: Truncation,
    cfg: &RegConfig,
) -> Result<RegularizationResult<T>> {
    let freq = lin.freq();
    let ham = mode == Mode::Hamiltonian;
    let st1 = step1_space_diffeo(lin.coeffs(), freq, ham).map_err(|e| e.in_step("space_diffeo"))?;
    let [b0, b1, b2, _] = &st1.coeffs;
    let st2 = step2_time_reparam(&st1.b, [b0, b1, b2], freq).map_err(|e| e.in_step("time_reparam"))?;
    let st3 = if ham {
        step3_skipped(&st2.c)
    } else {
        step3_descent_zero(&st2.c, st2.m3, freq, cfg.zero_mean_tol).map_err(|e| e.in_step("descent_zero"))?
    };
    let st4 = step4_translation(&st3.d, freq).map_err(|e| e.in_step("translation"))?;
    let st5 = step5_pseudo_diff(&st4.e, st2.m3, st4.m1, freq, mode, trunc, cfg.neumann_tol)
        .map_err(|e| e.in_step("pseudo_diff"))?;

    let s0v = s0(trunc.nu);
    let checks = RegChecks {
        b3_variance: st1.b3_variance.as_f64(),
        b2_norm: b2.sobolev_norm(s0v).as_f64(),
        c2_mean: st3.c2_mean.as_f64(),
        t2_norm: st3.t2_norm.as_f64(),
        e1_defect: st4.e1_defect.as_f64(),
        r1_max: st5.r1_max.as_f64(),
        r_norm: st5.r_norm.as_f64(),
        steps: vec![
            st1.diagnostic.clone(),
            st2.diagnostic.clone(),
            st3.diagnostic.clone(),
            st4.diagnostic.clone(),
            st5.diagnostic.clone(),
        ],
    };
    let chain = Chain {
        b: st1.b,
        beta: st1.beta,
        beta_tilde: st1.beta_tilde,
        b_coeffs: st1.coeffs,
        alpha: st2.alpha,
        alpha_tilde: st2.alpha_tilde,
        rho: st2.rho,
        c: st2.c,
        v: st3.v,
        v_inv: st3.v_inv,
        d: st3.d,
        p: st4.p,
        e: st4.e,
        w: st5.w,
    };
    Ok(RegularizationResult {
        mode,
        m3: st2.m3,
        m1: st4.m1,
        r: st5.r,
        s: st5.s,
        s_inv: st5.s_inv,
        chain,
        checks,
        freq: freq.clone(),
        trunc,
    })
}

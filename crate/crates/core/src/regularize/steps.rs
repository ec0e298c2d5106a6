//! The five conjugation steps, each usable on its own.

use num_traits::Zero;
use serde::Serialize;

use super::Mode;
use crate::error::{Error, Result};
use crate::opalg::ToplitzOperator;
use crate::scalar::{ij_pow, Real, C};
use crate::spectral::{
    compose, invert_torus_diffeo, s0, translate_x, DiffeoKind, FourierField, Frequency, GridShape, Truncation,
};

type F<T> = FourierField<T>;

/// Per-step diagnostic written to the step dump.
#[derive(Clone, Debug, Serialize)]
pub struct StepDiagnostic {
    pub step: &'static str,
    /// Residual of the step's defining identity.
    pub identity_residual: f64,
    /// `(name, ‖·‖_{s₀})` of the produced coefficients.
    pub norms: Vec<(String, f64)>,
}

/// Largest x-variance of `f(φ, ·)` over the φ-nodes of its grid.
pub fn max_x_variance<T: Real>(f: &F<T>) -> T {
    let shape = GridShape::of(f.trunc());
    let g = f.to_grid();
    let m = T::int(shape.m_x as i64);
    g.chunks(shape.m_x).fold(T::zero(), |worst, row| {
        let mean = row.iter().fold(T::zero(), |s, &v| s + v) / m;
        let var = row.iter().fold(T::zero(), |s, &v| s + (v - mean) * (v - mean)) / m;
        worst.max(var)
    })
}

fn grid_min<T: Real>(f: &F<T>) -> T {
    f.to_grid().into_iter().fold(T::infinity(), |m, v| m.min(v))
}

fn norm<T: Real>(name: &str, f: &F<T>) -> (String, f64) {
    (name.to_string(), f.sobolev_norm(s0(f.trunc().nu)).as_f64())
}

/// Output of the change of space variable.
#[derive(Clone, Debug)]
pub struct Step1<T: Real> {
    /// `b(φ)`, equal to `b₃`.
    pub b: F<T>,
    pub beta: F<T>,
    pub beta_tilde: F<T>,
    /// `[b₀, b₁, b₂, b₃]` with `b₃` extracted from the conjugated operator.
    pub coeffs: [F<T>; 4],
    /// Largest x-variance of the extracted `b₃`.
    pub b3_variance: T,
    pub diagnostic: StepDiagnostic,
}

/// Coefficients of `M_g⁻¹ L M_g` for `g = 1 + β_x`; the symplectic change of
/// variable `h -> (1 + β_x) h(x + β)` is this multiplication followed by the
/// plain composition.
fn conjugate_by_jacobian<T: Real>(a: &[F<T>; 4], beta: &F<T>, freq: &Frequency<T>) -> Result<[F<T>; 4]> {
    let g = beta.dx_pow(1).add_constant(T::one());
    let gi = g.map_grid(|v| T::one() / v);
    let r = |k: i32| -> Result<F<T>> { g.dx_pow(k).mul(&gi) };
    let (g1, g2, g3) = (r(1)?, r(2)?, r(3)?);
    let gt = g.omega_dphi(freq).mul(&gi)?;
    let p3 = a[3].add_constant(T::one());
    let three = T::lit(3.0);
    let a2 = a[2].add(&p3.mul(&g1)?.scale(three))?;
    let a1 = a[1].add(&p3.mul(&g2)?.scale(three))?.add(&a[2].mul(&g1)?.scale(T::lit(2.0)))?;
    let a0 = a[0].add(&p3.mul(&g3)?)?.add(&a[2].mul(&g2)?)?.add(&a[1].mul(&g1)?)?.add(&gt)?;
    Ok([a0, a1, a2, a[3].clone()])
}

/// Step 1: `y = x + β(φ, x)` making the `∂_yyy` coefficient `b(φ)`.
/// `a = [a₀, a₁, a₂, a₃]`.
pub fn step1_space_diffeo<T: Real>(a: &[F<T>; 4], freq: &Frequency<T>, hamiltonian: bool) -> Result<Step1<T>> {
    let one = T::one();
    let p3 = a[3].add_constant(one);
    let min = grid_min(&p3);
    if min <= T::lit(0.5) {
        return Err(Error::DegenerateCoefficient(min.as_f64()));
    }
    let third = T::lit(1.0 / 3.0);
    let q = p3.map_grid(|v| v.powf(-third));
    let m = q.x_average();
    let b = m.map_grid(|v| v.powi(-3));
    let rho0 = q.div(&m)?.add_constant(-one);
    let beta = rho0.dx_pow(-1);
    let beta_tilde = invert_torus_diffeo(DiffeoKind::Space, &beta, freq)?;

    let a = if hamiltonian { conjugate_by_jacobian(a, &beta, freq)? } else { a.clone() };
    let bx = beta.dx_pow(1);
    let g = bx.add_constant(one);
    let (bxx, bxxx) = (beta.dx_pow(2), beta.dx_pow(3));
    let three = T::lit(3.0);
    let g2 = g.mul(&g)?;
    let inv = |f: &F<T>| compose(DiffeoKind::Space, f, &beta_tilde, freq);

    let b3 = inv(&p3.mul(&g2)?.mul(&g)?)?;
    let b2 = inv(&p3.mul(&g)?.mul(&bxx)?.scale(three).add(&a[2].mul(&g2)?)?)?;
    let b1 = inv(&beta
        .omega_dphi(freq)
        .add(&p3.mul(&bxxx)?)?
        .add(&a[2].mul(&bxx)?)?
        .add(&a[1].mul(&g)?)?)?;
    let b0 = inv(&a[0])?;
    let b3_variance = max_x_variance(&b3);
    let diagnostic = StepDiagnostic {
        step: "space_diffeo",
        identity_residual: p3.mul(&g2)?.mul(&g)?.sub(&b)?.sup_norm().as_f64(),
        norms: vec![norm("beta", &beta), norm("b1", &b1), norm("b2", &b2), norm("b0", &b0)],
    };
    Ok(Step1 { b, beta, beta_tilde, coeffs: [b0, b1, b2, b3], b3_variance, diagnostic })
}

/// Output of the time reparametrization.
#[derive(Clone, Debug)]
pub struct Step2<T: Real> {
    pub m3: T,
    pub alpha: F<T>,
    pub alpha_tilde: F<T>,
    pub rho: F<T>,
    /// `[c₀, c₁, c₂]`.
    pub c: [F<T>; 3],
    pub diagnostic: StepDiagnostic,
}

/// Step 2: `φ -> φ + ω α(φ)` making `∂_yyy` and `ω·∂_φ` proportional.
/// `b = [b₀, b₁, b₂]`, `b3` depends on φ only.
pub fn step2_time_reparam<T: Real>(b3: &F<T>, b: [&F<T>; 3], freq: &Frequency<T>) -> Result<Step2<T>> {
    let m3 = b3.mean();
    if m3.abs() < T::lit(1e-12) {
        return Err(Error::Domain("vanishing m3".into()));
    }
    let alpha = b3.add_constant(-m3).omega_dphi_inv(freq)?.scale(T::one() / m3);
    let alpha_tilde = invert_torus_diffeo(DiffeoKind::Time, &alpha, freq)?;
    let inv = |f: &F<T>| compose(DiffeoKind::Time, f, &alpha_tilde, freq);
    let rho = inv(&alpha.omega_dphi(freq).add_constant(T::one()))?;
    let c = [inv(b[0])?.div(&rho)?, inv(b[1])?.div(&rho)?, inv(b[2])?.div(&rho)?];
    let identity = alpha.omega_dphi(freq).add_constant(T::one()).scale(m3).sub(b3)?;
    let diagnostic = StepDiagnostic {
        step: "time_reparam",
        identity_residual: identity.sup_norm().as_f64(),
        norms: vec![norm("alpha", &alpha), norm("c0", &c[0]), norm("c1", &c[1]), norm("c2", &c[2])],
    };
    Ok(Step2 { m3, alpha, alpha_tilde, rho, c, diagnostic })
}

/// Output of the multiplication step.
#[derive(Clone, Debug)]
pub struct Step3<T: Real> {
    pub v: F<T>,
    pub v_inv: F<T>,
    /// `[d₀, d₁]`.
    pub d: [F<T>; 2],
    /// `‖(3 m₃ v_y + c₂ v)/v‖_{s₀}`, the remaining `∂_yy` coefficient.
    pub t2_norm: T,
    /// Largest φ-wise x-mean of `c₂`.
    pub c2_mean: T,
    pub diagnostic: StepDiagnostic,
}

/// The identity multiplication used when the step is skipped.
pub fn step3_skipped<T: Real>(c: &[F<T>; 3]) -> Step3<T> {
    let one = F::one(*c[0].trunc());
    Step3 {
        v: one.clone(),
        v_inv: one,
        d: [c[0].clone(), c[1].clone()],
        t2_norm: c[2].sobolev_norm(s0(c[2].trunc().nu)),
        c2_mean: T::zero(),
        diagnostic: StepDiagnostic {
            step: "descent_zero (skipped)",
            identity_residual: c[2].sup_norm().as_f64(),
            norms: vec![norm("c2", &c[2])],
        },
    }
}

/// Step 3: multiplication by `v` removing the `∂_yy` term; requires the
/// φ-wise x-mean of `c₂` to vanish within `mean_tol`.
pub fn step3_descent_zero<T: Real>(c: &[F<T>; 3], m3: T, freq: &Frequency<T>, mean_tol: f64) -> Result<Step3<T>> {
    let avg = c[2].x_average();
    let shape = GridShape::of(avg.trunc());
    let g = avg.to_grid();
    let mut c2_mean = T::zero();
    for (node, row) in g.chunks(shape.m_x).enumerate() {
        let mean = row[0];
        if mean.abs() > T::lit(mean_tol) {
            return Err(Error::ZeroMean { node, mean: mean.as_f64() });
        }
        c2_mean = c2_mean.max(mean.abs());
    }
    let expo = c[2].dx_pow(-1).scale(-T::one() / (T::lit(3.0) * m3));
    let v = expo.map_grid(|x| x.exp());
    let v_inv = expo.map_grid(|x| (-x).exp());
    let (vy, vyy, vyyy) = (v.dx_pow(1), v.dx_pow(2), v.dx_pow(3));
    let three = T::lit(3.0);
    let t2 = vy.scale(three * m3).add(&c[2].mul(&v)?)?;
    let t1 = vyy.scale(three * m3).add(&c[2].mul(&vy)?.scale(T::lit(2.0)))?.add(&c[1].mul(&v)?)?;
    let t0 = v
        .omega_dphi(freq)
        .add(&vyyy.scale(m3))?
        .add(&c[2].mul(&vyy)?)?
        .add(&c[1].mul(&vy)?)?
        .add(&c[0].mul(&v)?)?;
    let d = [t0.mul(&v_inv)?, t1.mul(&v_inv)?];
    let t2v = t2.mul(&v_inv)?;
    let t2_norm = t2v.sobolev_norm(s0(t2v.trunc().nu));
    let diagnostic = StepDiagnostic {
        step: "descent_zero",
        identity_residual: t2_norm.as_f64(),
        norms: vec![norm("v", &v), norm("d0", &d[0]), norm("d1", &d[1])],
    };
    Ok(Step3 { v, v_inv, d, t2_norm, c2_mean, diagnostic })
}

/// Output of the translation step.
#[derive(Clone, Debug)]
pub struct Step4<T: Real> {
    pub m1: T,
    pub p: F<T>,
    /// `[e₀, e₁]`.
    pub e: [F<T>; 2],
    /// `sup_θ |(1/2π)∫ e₁(θ, z) dz − m₁|`.
    pub e1_defect: T,
    pub diagnostic: StepDiagnostic,
}

/// Step 4: `z = y + p(θ)` making the x-average of the `∂_z` coefficient the
/// constant `m₁`. Here `ω·∂_θ p = V := m₁ − (1/2π)∫ d₁ dy`.
pub fn step4_translation<T: Real>(d: &[F<T>; 2], freq: &Frequency<T>) -> Result<Step4<T>> {
    let m1 = d[1].mean();
    let v = d[1].x_average().scale(-T::one()).add_constant(m1);
    let p = v.omega_dphi_inv(freq)?;
    let back = p.scale(-T::one());
    let e1 = p.omega_dphi(freq).add(&translate_x(&d[1], &back)?)?;
    let e0 = translate_x(&d[0], &back)?;
    let e1_defect = e1.x_average().add_constant(-m1).sup_norm();
    let diagnostic = StepDiagnostic {
        step: "translation",
        identity_residual: e1_defect.as_f64(),
        norms: vec![norm("p", &p), norm("e0", &e0), norm("e1", &e1)],
    };
    Ok(Step4 { m1, p, e: [e0, e1], e1_defect, diagnostic })
}

/// Output of the pseudo-differential step.
#[derive(Clone, Debug)]
pub struct Step5<T: Real> {
    pub w: F<T>,
    pub s: ToplitzOperator<T>,
    pub s_inv: ToplitzOperator<T>,
    pub r: ToplitzOperator<T>,
    /// `max |r₁|` over stored coefficients.
    pub r1_max: T,
    /// `|R|_{s₀}`.
    pub r_norm: T,
    pub diagnostic: StepDiagnostic,
}

fn inv_dx<T: Real>(j: i64) -> C<T> {
    if j == 0 {
        C::zero()
    } else {
        C::new(T::one(), T::zero()) / ij_pow::<T>(j, 1)
    }
}

fn pi0<T: Real>(j: i64) -> C<T> {
    if j == 0 {
        C::zero()
    } else {
        C::new(T::one(), T::zero())
    }
}

/// Step 5: conjugation by `S = I + w ∂_x⁻¹` (or `exp(π₀ w ∂_x⁻¹)` in the
/// Hamiltonian mode) leaving a remainder of order zero on `trunc`.
pub fn step5_pseudo_diff<T: Real>(
    e: &[F<T>; 2],
    m3: T,
    m1: T,
    freq: &Frequency<T>,
    mode: Mode,
    trunc: Truncation,
    neumann_tol: f64,
) -> Result<Step5<T>> {
    let three = T::lit(3.0);
    let [e0, e1] = e;
    let w = e1.scale(-T::one()).add_constant(m1).dx_pow(-1).scale(T::one() / (three * m3));
    let r1 = w.dx_pow(1).scale(three * m3).add(e1)?.add_constant(-m1);
    let r1_max = r1.max_coeff();
    let mw = ToplitzOperator::from_multiplication(&w, trunc)?;
    let (s, s_inv, r) = match mode {
        Mode::Hamiltonian => {
            let x = mw.right_diag(inv_dx).left_diag(pi0);
            let s = x.exp()?;
            let s_inv = x.scale(-T::one()).exp()?;
            // R = S⁻¹(L₄ S − S D) with L₄ = D + (e₁ − m₁)∂_x + e₀
            let sym = |j: i64| ij_pow::<T>(j, 3) * m3 + ij_pow::<T>(j, 1) * m1;
            let lower = ToplitzOperator::from_multiplication(&e1.add_constant(-m1), trunc)?
                .right_diag(|j| ij_pow(j, 1))
                .add(&ToplitzOperator::from_multiplication(e0, trunc)?)?;
            let comm = s.omega_dphi_commutator(freq).add(&s.left_diag(sym).sub(&s.right_diag(sym))?)?;
            let r = s_inv.compose(&comm.add(&lower.compose(&s)?)?)?;
            (s, s_inv, r)
        }
        _ => {
            let psi = mw.right_diag(inv_dx);
            let s = ToplitzOperator::identity(trunc).add(&psi)?;
            let s_inv = psi.neumann_inverse(neumann_tol)?;
            let q = w.dx_pow(2).scale(three * m3).add(&e1.mul(&w)?)?.sub(&w.scale(m1))?;
            // e₀w comes from e₀ S = e₀ + e₀ w ∂⁻¹
            let rm1 = w
                .omega_dphi(freq)
                .add(&w.dx_pow(3).scale(m3))?
                .add(&e1.mul(&w.dx_pow(1))?)?
                .add(&e0.mul(&w)?)?;
            let inner = ToplitzOperator::from_multiplication(e0, trunc)?
                .add(&ToplitzOperator::from_multiplication(&q, trunc)?.right_diag(pi0))?
                .add(&ToplitzOperator::from_multiplication(&rm1, trunc)?.right_diag(inv_dx))?;
            let r = s_inv.compose(&inner)?;
            (s, s_inv, r)
        }
    };
    let r_norm = r.decay_norm(s0(trunc.nu));
    let diagnostic = StepDiagnostic {
        step: "pseudo_diff",
        identity_residual: r1_max.as_f64(),
        norms: vec![norm("w", &w), ("R (decay)".into(), r_norm.as_f64())],
    };
    Ok(Step5 { w, s, s_inv, r, r1_max, r_norm, diagnostic })
}

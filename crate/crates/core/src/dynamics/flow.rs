//! Spatial states, the exact reduced flow and the integrating-factor RK4
//! integrator of `∂_t h + (1 + a₃)h_xxx + a₂h_xx + a₁h_x + a₀h = 0`.

use num_traits::Zero;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::opalg::{DenseMatrix, DiagonalOperator, ToplitzOperator};
use crate::scalar::{ij_pow, Real, C};
use crate::spectral::{FourierField, Frequency, Truncation};

/// Norm growth reported as an instability.
pub const GROWTH_LIMIT: f64 = 1e6;

/// Spatial Fourier coefficients `h_j`, `|j| <= n_x`, at time `t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseState<T: Real> {
    pub h: Vec<C<T>>,
    pub t: T,
}

impl<T: Real> PhaseState<T> {
    pub fn new(h: Vec<C<T>>, t: T) -> Result<Self> {
        if h.len() % 2 == 0 {
            return Err(Error::Dimension(format!("{} spatial coefficients", h.len())));
        }
        Ok(PhaseState { h, t })
    }

    pub fn zeros(n_x: usize, t: T) -> Self {
        PhaseState { h: vec![C::zero(); 2 * n_x + 1], t }
    }

    pub fn n_x(&self) -> usize {
        self.h.len() / 2
    }

    pub fn get(&self, j: i64) -> C<T> {
        self.h[(j + self.n_x() as i64) as usize]
    }

    /// `‖h‖_{H^s_x}` with weights `max(1, |j|)^{2s}`.
    pub fn norm(&self, s: f64) -> T {
        norm_of(&self.h, s)
    }

    /// `max_j |conj(h_j) − h_{−j}|`.
    pub fn reality_defect(&self) -> T {
        let n = self.h.len();
        (0..n).fold(T::zero(), |m, k| m.max((self.h[k].conj() - self.h[n - 1 - k]).norm()))
    }

    /// `‖self − other‖_{H^s_x}`.
    pub fn distance(&self, other: &Self, s: f64) -> Result<T> {
        if self.h.len() != other.h.len() {
            return Err(Error::Dimension("states of different size".into()));
        }
        let d: Vec<C<T>> = self.h.iter().zip(&other.h).map(|(a, b)| *a - *b).collect();
        Ok(norm_of(&d, s))
    }

    /// Real state with `|j| <= band`, amplitudes `exp(−decay |j|)`.
    pub fn random<R: Rng>(n_x: usize, band: usize, decay: f64, rng: &mut R) -> Self {
        let mut st = Self::zeros(n_x, T::zero());
        let n = n_x as i64;
        for j in 0..=n.min(band as i64) {
            let w = (-decay * j as f64).exp();
            let re = T::lit(w * rng.gen_range(-1.0..1.0));
            let im = if j == 0 { T::zero() } else { T::lit(w * rng.gen_range(-1.0..1.0)) };
            st.h[(n + j) as usize] = C::new(re, im);
            st.h[(n - j) as usize] = C::new(re, -im);
        }
        st
    }
}

pub(crate) fn norm_of<T: Real>(h: &[C<T>], s: f64) -> T {
    let n = (h.len() / 2) as i64;
    let two_s = T::lit(2.0 * s);
    h.iter()
        .enumerate()
        .fold(T::zero(), |acc, (k, c)| acc + T::int((k as i64 - n).abs().max(1)).powf(two_s) * c.norm_sqr())
        .sqrt()
}

/// `v_j(t₀ + t) = e^{−μ_j t} v_j(t₀)`.
pub fn reduced_flow<T: Real>(eigs: &DiagonalOperator<T>, v0: &PhaseState<T>, t: T) -> PhaseState<T> {
    let n = v0.n_x() as i64;
    let h = v0
        .h
        .iter()
        .enumerate()
        .map(|(k, c)| *c * (eigs.get(k as i64 - n) * C::new(-t, T::zero())).exp())
        .collect();
    PhaseState { h, t: v0.t + t }
}

/// `Σ_k a_k(φ, x) ∂_x^k` as a φ-family of spatial operators.
#[derive(Clone, Debug)]
pub struct VariablePart<T: Real> {
    op: ToplitzOperator<T>,
}

impl<T: Real> VariablePart<T> {
    /// All φ-modes of the coefficients are kept.
    pub fn new(coeffs: &[FourierField<T>; 4], n_x: usize) -> Result<Self> {
        let ct = *coeffs[0].trunc();
        let trunc = Truncation::new(ct.nu, ct.n_phi.div_ceil(2), n_x, ct.oversample)?;
        let mut op = ToplitzOperator::zero(trunc);
        for (k, a) in coeffs.iter().enumerate() {
            let m = ToplitzOperator::from_multiplication(a, trunc)?.right_diag(|j| ij_pow(j, k as u32));
            op = op.add(&m)?;
        }
        Ok(VariablePart { op })
    }

    pub fn n_x(&self) -> usize {
        self.op.trunc().n_x
    }

    /// `Σ_k a_k(φ) ∂_x^k` at a fixed `φ`.
    pub fn frozen(&self, phi: &[T]) -> DenseMatrix<T> {
        self.op.frozen(phi)
    }
}

fn phase_at<T: Real>(freq: &Frequency<T>, t: T) -> Vec<T> {
    freq.omega().iter().map(|&w| w * t).collect()
}

/// Lawson RK4 on `∂_t h = i j³ h − V(ωt) h`; the Airy factor `e^{i j³ dt}`
/// is applied exactly.
pub fn integrate_linear<T: Real>(
    coeffs: &[FourierField<T>; 4],
    freq: &Frequency<T>,
    h0: &PhaseState<T>,
    t_end: T,
    dt: T,
    n_samples: usize,
) -> Result<Vec<PhaseState<T>>> {
    let var = VariablePart::new(coeffs, h0.n_x())?;
    integrate_with(&var, freq, h0, t_end, dt, n_samples)
}

/// [`integrate_linear`] with a prebuilt variable part.
pub fn integrate_with<T: Real>(
    var: &VariablePart<T>,
    freq: &Frequency<T>,
    h0: &PhaseState<T>,
    t_end: T,
    dt: T,
    n_samples: usize,
) -> Result<Vec<PhaseState<T>>> {
    if var.n_x() != h0.n_x() {
        return Err(Error::Dimension(format!("operator n_x = {} but state n_x = {}", var.n_x(), h0.n_x())));
    }
    if !(dt > T::zero()) || t_end < T::zero() || n_samples == 0 {
        return Err(Error::InvalidParameter("need dt > 0, T >= 0 and at least one sample".into()));
    }
    let per = (t_end / (dt * T::int(n_samples as i64))).ceil().to_usize().unwrap_or(1).max(1);
    let steps = per * n_samples;
    let dt = t_end / T::int(steps as i64);
    let n = h0.n_x() as i64;
    let half = T::lit(0.5);
    let factor = |tau: T| -> Vec<C<T>> {
        (-n..=n)
            .map(|j| {
                let a = T::int(j * j * j) * tau;
                C::new(a.cos(), a.sin())
            })
            .collect()
    };
    let e_half = factor(dt * half);
    let e_full = factor(dt);
    let mul = |e: &[C<T>], v: &[C<T>]| -> Vec<C<T>> { e.iter().zip(v).map(|(a, b)| *a * *b).collect() };
    let axpy = |x: &[C<T>], a: T, y: &[C<T>]| -> Vec<C<T>> { x.iter().zip(y).map(|(p, q)| *p + *q * a).collect() };
    let norm0 = h0.norm(0.0).max(T::min_positive_value());
    let mut h = h0.h.clone();
    let mut out = vec![h0.clone()];
    let neg = |m: &DenseMatrix<T>, v: &[C<T>]| -> Vec<C<T>> {
        m.matvec(v).expect("state size").into_iter().map(|c| -c).collect()
    };
    let mut m0 = var.frozen(&phase_at(freq, h0.t));
    for step in 0..steps {
        let t = h0.t + dt * T::int(step as i64);
        let mh = var.frozen(&phase_at(freq, t + dt * half));
        let m1 = var.frozen(&phase_at(freq, t + dt));
        let k1 = neg(&m0, &h);
        let eh = mul(&e_half, &h);
        let k2 = neg(&mh, &axpy(&eh, dt * half, &mul(&e_half, &k1)));
        let k3 = neg(&mh, &axpy(&eh, dt * half, &k2));
        let ef = mul(&e_full, &h);
        let k4 = neg(&m1, &axpy(&ef, dt, &mul(&e_half, &k3)));
        m0 = m1;
        let sixth = dt / T::lit(6.0);
        h = ef
            .iter()
            .enumerate()
            .map(|(i, &c)| c + (e_full[i] * k1[i] + e_half[i] * (k2[i] + k3[i]) * T::lit(2.0) + k4[i]) * sixth)
            .collect();
        let growth = norm_of(&h, 0.0) / norm0;
        if !(growth.as_f64() <= GROWTH_LIMIT) {
            return Err(Error::Unstable { t: (t + dt).as_f64(), growth: growth.as_f64() });
        }
        if (step + 1) % per == 0 {
            out.push(PhaseState { h: h.clone(), t: t + dt });
        }
    }
    Ok(out)
}

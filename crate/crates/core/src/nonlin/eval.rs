//! Grid evaluation of `F(u)` and of the linearized operator.

use super::ast::{Columns, Expr};
use super::spec::NonlinearitySpec;
use crate::error::Result;
use crate::scalar::Real;
use crate::spectral::{analyze, combine, synthesize, FourierField, Frequency, GridShape, Truncation};

/// Samples of `(φ, x, u, u_x, u_xx, u_xxx)` on a grid.
pub struct Jet<T> {
    shape: GridShape,
    phi: Vec<Vec<T>>,
    x: Vec<T>,
    z: [Vec<T>; 4],
}

impl<T: Real> Jet<T> {
    pub fn new(u: &FourierField<T>, shape: GridShape) -> Result<Self> {
        let z = [
            synthesize(u, &shape)?,
            synthesize(&u.dx_pow(1), &shape)?,
            synthesize(&u.dx_pow(2), &shape)?,
            synthesize(&u.dx_pow(3), &shape)?,
        ];
        let total = shape.total();
        let mut phi = vec![Vec::with_capacity(total); shape.nu];
        let mut x = Vec::with_capacity(total);
        let mut node = vec![T::zero(); shape.nu];
        for p in 0..shape.n_phi_nodes() {
            shape.phi_node(p, &mut node);
            for k in 0..shape.m_x {
                for (col, &v) in phi.iter_mut().zip(&node) {
                    col.push(v);
                }
                x.push(shape.x_node(k));
            }
        }
        Ok(Jet { shape, phi, x, z })
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn columns(&self) -> Columns<'_, T> {
        Columns {
            phi: self.phi.iter().map(|c| c.as_slice()).collect(),
            x: &self.x,
            z: [&self.z[0], &self.z[1], &self.z[2], &self.z[3]],
        }
    }

    /// `ε·e` sampled on the grid and analyzed into `out`.
    pub fn eval_field(&self, e: &Expr, epsilon: f64, out: &Truncation) -> Result<FourierField<T>> {
        let eps = T::lit(epsilon);
        let s: Vec<T> = e.eval_columns(&self.columns())?.into_iter().map(|v| eps * v).collect();
        analyze(&s, &self.shape, out)
    }
}

fn jet_for<T: Real>(u: &FourierField<T>, out: &Truncation) -> Result<Jet<T>> {
    Jet::new(u, GridShape::covering(GridShape::of(out), &[u.trunc()]))
}

/// `ε f(φ, x, u, u_x, u_xx, u_xxx)` analyzed into `out`.
pub fn nonlinear_term<T: Real>(spec: &NonlinearitySpec, u: &FourierField<T>, out: &Truncation) -> Result<FourierField<T>> {
    spec.check_nu(u.trunc().nu)?;
    jet_for(u, out)?.eval_field(spec.f(), spec.epsilon(), out)
}

/// `F(u) = ω·∂_φ u + u_xxx + ε f(φ, x, u, u_x, u_xx, u_xxx)` in `u`'s truncation.
pub fn residual<T: Real>(spec: &NonlinearitySpec, freq: &Frequency<T>, u: &FourierField<T>) -> Result<FourierField<T>> {
    residual_into(spec, freq, u, u.trunc())
}

/// [`residual`] analyzed into `out`.
pub fn residual_into<T: Real>(
    spec: &NonlinearitySpec,
    freq: &Frequency<T>,
    u: &FourierField<T>,
    out: &Truncation,
) -> Result<FourierField<T>> {
    let lin = u.omega_dphi(freq).add(&u.dx_pow(3))?.resized(*out);
    lin.add(&nonlinear_term(spec, u, out)?)
}

/// `a_k = ε (∂_{z_k} f)(φ, x, u, u_x, u_xx, u_xxx)` for `k = 0..=3`.
pub fn linearized_coefficients<T: Real>(
    spec: &NonlinearitySpec,
    u: &FourierField<T>,
    out: &Truncation,
) -> Result<[FourierField<T>; 4]> {
    spec.check_nu(u.trunc().nu)?;
    let jet = jet_for(u, out)?;
    let a = [0, 1, 2, 3].map(|k| jet.eval_field(spec.df(k), spec.epsilon(), out));
    let [a0, a1, a2, a3] = a;
    Ok([a0?, a1?, a2?, a3?])
}

/// `L h = ω·∂_φ h + (1 + a₃) h_xxx + a₂ h_xx + a₁ h_x + a₀ h`.
#[derive(Clone, Debug)]
pub struct LinearizedOperator<T: Real> {
    freq: Frequency<T>,
    a: [FourierField<T>; 4],
}

impl<T: Real> LinearizedOperator<T> {
    pub fn new(freq: Frequency<T>, a: [FourierField<T>; 4]) -> Self {
        LinearizedOperator { freq, a }
    }

    /// Linearization of `F` at `u`, coefficients truncated to `out`.
    pub fn at(spec: &NonlinearitySpec, freq: &Frequency<T>, u: &FourierField<T>, out: &Truncation) -> Result<Self> {
        Ok(Self::new(freq.clone(), linearized_coefficients(spec, u, out)?))
    }

    pub fn freq(&self) -> &Frequency<T> {
        &self.freq
    }

    /// `a_k`.
    pub fn coeff(&self, k: usize) -> &FourierField<T> {
        &self.a[k]
    }

    pub fn coeffs(&self) -> &[FourierField<T>; 4] {
        &self.a
    }

    /// `L h` in `h`'s truncation, products formed on a covering grid.
    pub fn apply(&self, h: &FourierField<T>) -> Result<FourierField<T>> {
        let out = h.trunc();
        let d = [h.clone(), h.dx_pow(1), h.dx_pow(2), h.dx_pow(3)];
        let inputs = [&self.a[0], &self.a[1], &self.a[2], &self.a[3], &d[0], &d[1], &d[2], &d[3]];
        let var = combine(out, &inputs, |v| v[0] * v[4] + v[1] * v[5] + v[2] * v[6] + v[3] * v[7])?;
        h.omega_dphi(&self.freq).add(&d[3])?.add(&var)
    }
}

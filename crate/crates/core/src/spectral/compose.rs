//! Composition with torus diffeomorphisms and their inverses.

use num_traits::Zero;
use rayon::prelude::*;

use super::field::FourierField;
use super::frequency::Frequency;
use super::grid::{analyze, fft_axes, synthesize, GridShape};
use super::truncation::Truncation;
use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Direction of a torus diffeomorphism.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiffeoKind {
    /// `h(φ, x) -> h(φ, x + β(φ, x))`.
    Space,
    /// `h(φ, y) -> h(φ + ω α(φ), y)` with `α` depending on φ only.
    Time,
}

const FIXED_POINT_TOL: f64 = 1e-13;
const FIXED_POINT_MAX_ITERS: usize = 100;

/// Composition into the field's own truncation.
pub fn compose<T: Real>(
    kind: DiffeoKind,
    field: &FourierField<T>,
    disp: &FourierField<T>,
    freq: &Frequency<T>,
) -> Result<FourierField<T>> {
    compose_into(kind, field, disp, freq, field.trunc())
}

/// Composition re-analyzed into `out`.
pub fn compose_into<T: Real>(
    kind: DiffeoKind,
    field: &FourierField<T>,
    disp: &FourierField<T>,
    freq: &Frequency<T>,
    out: &Truncation,
) -> Result<FourierField<T>> {
    check_bound(kind, disp, freq)?;
    let shape = GridShape::covering(GridShape::of(out), &[disp.trunc(), field.trunc()]);
    let samples = match kind {
        DiffeoKind::Space => {
            let beta = synthesize(disp, &shape)?;
            let ev = XEvaluator::new(field, &shape);
            space_samples(&ev, &shape, |p, k| beta[p * shape.m_x + k])
        }
        DiffeoKind::Time => {
            let alpha = phi_samples(disp, &shape)?;
            time_samples(field, &shape, freq, &alpha)
        }
    };
    analyze(&samples, &shape, out)
}

/// Translation `h(φ, x) -> h(φ, x + q(φ))` by a φ-only shift, exact on
/// coefficients in x.
pub fn translate_x<T: Real>(field: &FourierField<T>, shift: &FourierField<T>) -> Result<FourierField<T>> {
    compose_space_unchecked(field, shift)
}

fn compose_space_unchecked<T: Real>(field: &FourierField<T>, disp: &FourierField<T>) -> Result<FourierField<T>> {
    let out = field.trunc();
    let shape = GridShape::covering(GridShape::of(out), &[disp.trunc(), field.trunc()]);
    let beta = synthesize(disp, &shape)?;
    let ev = XEvaluator::new(field, &shape);
    let samples = space_samples(&ev, &shape, |p, k| beta[p * shape.m_x + k]);
    analyze(&samples, &shape, out)
}

/// Solves `x = y + β̃(φ, y) ⟺ y = x + β(φ, x)` (space) or the analogous
/// time relation `θ = φ + ω α(φ) ⟺ φ = θ + ω α̃(θ)`.
pub fn invert_torus_diffeo<T: Real>(
    kind: DiffeoKind,
    disp: &FourierField<T>,
    freq: &Frequency<T>,
) -> Result<FourierField<T>> {
    check_bound(kind, disp, freq)?;
    let out = *disp.trunc();
    let shape = GridShape::of(&out);
    let tol = T::tol(FIXED_POINT_TOL);
    let samples: Vec<T> = match kind {
        DiffeoKind::Space => {
            let ev = XEvaluator::new(disp, &shape);
            let rows: Vec<Result<Vec<T>>> = (0..shape.n_phi_nodes())
                .into_par_iter()
                .map(|p| {
                    (0..shape.m_x)
                        .map(|k| {
                            let y: T = shape.x_node(k);
                            fixed_point(|t| -ev.eval(p, y + t), tol)
                        })
                        .collect()
                })
                .collect();
            rows.into_iter().collect::<Result<Vec<_>>>()?.concat()
        }
        DiffeoKind::Time => {
            let pe = PhiEvaluator::new(disp);
            let om = freq.omega().to_vec();
            let nodes: Vec<Result<T>> = (0..shape.n_phi_nodes())
                .into_par_iter()
                .map(|p| {
                    let mut th = vec![T::zero(); shape.nu];
                    shape.phi_node(p, &mut th);
                    fixed_point(
                        |t| {
                            let pt: Vec<T> = th.iter().zip(&om).map(|(&a, &w)| a + w * t).collect();
                            -pe.eval(&pt)
                        },
                        tol,
                    )
                })
                .collect();
            let vals = nodes.into_iter().collect::<Result<Vec<_>>>()?;
            vals.iter().flat_map(|&v| std::iter::repeat(v).take(shape.m_x)).collect()
        }
    };
    analyze(&samples, &shape, &out)
}

fn fixed_point<T: Real>(g: impl Fn(T) -> T, tol: T) -> Result<T> {
    let mut t = g(T::zero());
    for _ in 0..FIXED_POINT_MAX_ITERS {
        let next = g(t);
        let d = (next - t).abs();
        t = next;
        if d < tol {
            return Ok(t);
        }
    }
    let res = (g(t) - t).abs();
    Err(Error::NoConvergence { what: "inverse diffeomorphism", iterations: FIXED_POINT_MAX_ITERS, residual: res.as_f64() })
}

/// Sup of the derivative governing invertibility: `|β_x|` or `|ω·∂_φ α|`.
pub fn diffeo_derivative_sup<T: Real>(kind: DiffeoKind, disp: &FourierField<T>, freq: &Frequency<T>) -> T {
    match kind {
        DiffeoKind::Space => disp.dx_pow(1).sup_norm(),
        DiffeoKind::Time => disp.omega_dphi(freq).sup_norm(),
    }
}

fn check_bound<T: Real>(kind: DiffeoKind, disp: &FourierField<T>, freq: &Frequency<T>) -> Result<()> {
    if kind == DiffeoKind::Time {
        if !disp.is_phi_only(T::tol(1e-12)) {
            return Err(Error::InvalidParameter("time displacement must depend on phi only".into()));
        }
        if freq.nu() != disp.trunc().nu {
            return Err(Error::Dimension("frequency and field dimensions differ".into()));
        }
    }
    let d = diffeo_derivative_sup(kind, disp, freq);
    if d > T::lit(0.5) {
        let what = match kind {
            DiffeoKind::Space => "beta_x",
            DiffeoKind::Time => "omega.d_phi alpha",
        };
        return Err(Error::DegenerateDiffeo { what, value: d.as_f64() });
    }
    Ok(())
}

/// Values of a φ-only field at the φ-nodes of a grid.
fn phi_samples<T: Real>(f: &FourierField<T>, shape: &GridShape) -> Result<Vec<T>> {
    let s = synthesize(f, shape)?;
    Ok((0..shape.n_phi_nodes()).map(|p| s[p * shape.m_x]).collect())
}

/// Evaluates `x -> h(φ_p, x)` at arbitrary `x` for each φ-node `p`.
pub(crate) struct XEvaluator<T: Real> {
    n_x: usize,
    /// `H_j(φ_p)` for `j = 0..=n_x`, row per φ-node.
    partial: Vec<C<T>>,
}

impl<T: Real> XEvaluator<T> {
    pub(crate) fn new(field: &FourierField<T>, shape: &GridShape) -> Self {
        let tr = field.trunc();
        let nj = tr.nj();
        let mut dims = vec![shape.m_phi; shape.nu];
        dims.push(nj);
        let mut data = vec![C::zero(); shape.n_phi_nodes() * nj];
        let lat = tr.lattice();
        let mut l = vec![0i64; tr.nu];
        for li in 0..lat.len() {
            lat.point(li, &mut l);
            let mut slot = 0usize;
            for &v in &l {
                slot = slot * shape.m_phi + v.rem_euclid(shape.m_phi as i64) as usize;
            }
            for jj in 0..nj {
                data[slot * nj + jj] = field.coeffs()[li * nj + jj];
            }
        }
        let axes: Vec<usize> = (0..shape.nu).collect();
        fft_axes(&mut data, &dims, &axes, true);
        let n_x = tr.n_x;
        let mut partial = Vec::with_capacity(shape.n_phi_nodes() * (n_x + 1));
        for p in 0..shape.n_phi_nodes() {
            for j in 0..=n_x {
                partial.push(data[p * nj + n_x + j]);
            }
        }
        XEvaluator { n_x, partial }
    }

    /// `h(φ_p, x)`.
    pub(crate) fn eval(&self, p: usize, x: T) -> T {
        let row = &self.partial[p * (self.n_x + 1)..(p + 1) * (self.n_x + 1)];
        let z = C::new(x.cos(), x.sin());
        let mut s: C<T> = C::zero();
        for j in (1..=self.n_x).rev() {
            s = (s + row[j]) * z;
        }
        row[0].re + (s.re + s.re)
    }
}

fn space_samples<T: Real>(ev: &XEvaluator<T>, shape: &GridShape, disp: impl Fn(usize, usize) -> T + Sync) -> Vec<T> {
    let rows: Vec<Vec<T>> = (0..shape.n_phi_nodes())
        .into_par_iter()
        .map(|p| {
            (0..shape.m_x)
                .map(|k| {
                    let x: T = shape.x_node(k);
                    ev.eval(p, x + disp(p, k))
                })
                .collect()
        })
        .collect();
    rows.concat()
}

/// Evaluates a φ-only field at arbitrary φ by direct summation.
pub(crate) struct PhiEvaluator<T: Real> {
    trunc: Truncation,
    coeffs: Vec<C<T>>,
}

impl<T: Real> PhiEvaluator<T> {
    pub(crate) fn new(f: &FourierField<T>) -> Self {
        let tr = *f.trunc();
        let nj = tr.nj();
        let coeffs = (0..tr.n_l()).map(|li| f.coeffs()[li * nj + tr.n_x]).collect();
        PhiEvaluator { trunc: tr, coeffs }
    }

    pub(crate) fn eval(&self, phi: &[T]) -> T {
        let powers = axis_powers(phi, self.trunc.n_phi);
        let lat = self.trunc.lattice();
        let mut l = vec![0i64; self.trunc.nu];
        let mut acc = T::zero();
        for (li, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            lat.point(li, &mut l);
            acc = acc + (*c * lattice_exp(&powers, &l, self.trunc.n_phi)).re;
        }
        acc
    }
}

/// `e^{i k φ_a}` for `k = -n..=n` per axis `a`.
fn axis_powers<T: Real>(phi: &[T], n: usize) -> Vec<Vec<C<T>>> {
    phi.iter()
        .map(|&p| {
            let z = C::new(p.cos(), p.sin());
            let mut pos = vec![C::new(T::one(), T::zero()); n + 1];
            for k in 1..=n {
                pos[k] = pos[k - 1] * z;
            }
            let mut row = Vec::with_capacity(2 * n + 1);
            for k in (1..=n).rev() {
                row.push(pos[k].conj());
            }
            row.extend_from_slice(&pos);
            row
        })
        .collect()
}

fn lattice_exp<T: Real>(powers: &[Vec<C<T>>], l: &[i64], n: usize) -> C<T> {
    let mut e = C::new(T::one(), T::zero());
    for (a, &li) in l.iter().enumerate() {
        e = e * powers[a][(li + n as i64) as usize];
    }
    e
}

fn time_samples<T: Real>(field: &FourierField<T>, shape: &GridShape, freq: &Frequency<T>, alpha: &[T]) -> Vec<T> {
    let tr = field.trunc();
    let nj = tr.nj();
    let n_l = tr.n_l();
    // G[l][x_k] = Σ_j h_{l,j} e^{i j x_k}
    let mut g = vec![C::zero(); n_l * shape.m_x];
    for li in 0..n_l {
        for jj in 0..nj {
            let j = jj as i64 - tr.n_x as i64;
            g[li * shape.m_x + j.rem_euclid(shape.m_x as i64) as usize] = field.coeffs()[li * nj + jj];
        }
    }
    fft_axes(&mut g, &[n_l, shape.m_x], &[1], true);
    let lat = tr.lattice();
    let lpts = lat.points();
    let om = freq.omega();
    let rows: Vec<Vec<T>> = (0..shape.n_phi_nodes())
        .into_par_iter()
        .map(|p| {
            let mut phi = vec![T::zero(); shape.nu];
            shape.phi_node(p, &mut phi);
            for (a, v) in phi.iter_mut().enumerate() {
                *v = *v + om[a] * alpha[p];
            }
            let powers = axis_powers(&phi, tr.n_phi);
            let mut row = vec![T::zero(); shape.m_x];
            for li in 0..n_l {
                let e = lattice_exp(&powers, &lpts[li * tr.nu..(li + 1) * tr.nu], tr.n_phi);
                let gl = &g[li * shape.m_x..(li + 1) * shape.m_x];
                for k in 0..shape.m_x {
                    row[k] = row[k] + (gl[k] * e).re;
                }
            }
            row
        })
        .collect();
    rows.concat()
}

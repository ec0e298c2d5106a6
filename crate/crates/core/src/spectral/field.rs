use num_traits::Zero;
use rand::Rng;

use super::frequency::Frequency;
use super::grid::{analyze, synthesize, GridShape};
use super::truncation::{bracket, lnorm, Truncation};
use crate::error::{Error, Result};
use crate::scalar::{ij_pow, Real, C};

/// Truncated Fourier series of a real function on `T^nu x T`.
///
/// Coefficients are stored for every `(l, j)` in the truncation; reality
/// `conj(u_{l,j}) = u_{-l,-j}` is maintained by every constructor.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierField<T: Real> {
    trunc: Truncation,
    coeffs: Vec<C<T>>,
}

/// Symmetry flags of a field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct StructureReport {
    pub is_real: bool,
    pub in_x: bool,
    pub in_y: bool,
    pub zero_space_average: bool,
    pub zero_total_average: bool,
}

impl<T: Real> FourierField<T> {
    pub fn zeros(trunc: Truncation) -> Self {
        FourierField { trunc, coeffs: vec![C::zero(); trunc.len()] }
    }

    pub fn constant(trunc: Truncation, c: T) -> Self {
        let mut f = Self::zeros(trunc);
        let z = trunc.zero_index();
        f.coeffs[z] = C::new(c, T::zero());
        f
    }

    pub fn from_coeffs(trunc: Truncation, coeffs: Vec<C<T>>) -> Result<Self> {
        if coeffs.len() != trunc.len() {
            return Err(Error::Dimension(format!("expected {} coefficients, got {}", trunc.len(), coeffs.len())));
        }
        Ok(FourierField { trunc, coeffs })
    }

    /// Field with the given modes; each conjugate partner is set as well.
    pub fn from_modes(trunc: Truncation, modes: &[(Vec<i64>, i64, C<T>)]) -> Result<Self> {
        let mut f = Self::zeros(trunc);
        for (l, j, c) in modes {
            f.add_mode(l, *j, *c)?;
        }
        Ok(f)
    }

    /// Adds `c e^{i(l·φ+jx)} + conj` (or just the real part of `c` at `(0,0)`).
    pub fn add_mode(&mut self, l: &[i64], j: i64, c: C<T>) -> Result<()> {
        let idx = self
            .trunc
            .index(l, j)
            .ok_or_else(|| Error::Dimension(format!("mode ({l:?}, {j}) outside truncation")))?;
        let neg = self.trunc.neg(idx);
        if idx == neg {
            self.coeffs[idx].re = self.coeffs[idx].re + c.re;
        } else {
            self.coeffs[idx] = self.coeffs[idx] + c;
            self.coeffs[neg] = self.coeffs[neg] + c.conj();
        }
        Ok(())
    }

    /// Builds a field by evaluating a real function on the default grid.
    pub fn from_fn<F: Fn(&[T], T) -> T>(trunc: Truncation, f: F) -> Result<Self> {
        let shape = GridShape::of(&trunc);
        let samples = grid_eval(&shape, f);
        analyze(&samples, &shape, &trunc)
    }

    pub fn trunc(&self) -> &Truncation {
        &self.trunc
    }

    pub fn coeffs(&self) -> &[C<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C<T>] {
        &mut self.coeffs
    }

    /// Coefficient `u_{l,j}`; zero outside the truncation.
    pub fn get(&self, l: &[i64], j: i64) -> C<T> {
        self.trunc.index(l, j).map(|i| self.coeffs[i]).unwrap_or_else(C::zero)
    }

    /// Enforces the reality symmetry exactly.
    pub fn symmetrize(&mut self) {
        let n = self.coeffs.len();
        let half = T::lit(0.5);
        for i in 0..n / 2 + 1 {
            let k = n - 1 - i;
            let avg = (self.coeffs[i] + self.coeffs[k].conj()) * half;
            self.coeffs[i] = avg;
            self.coeffs[k] = avg.conj();
        }
    }

    /// Copy into another truncation (zero padding or truncating).
    pub fn resized(&self, trunc: Truncation) -> Self {
        let mut out = Self::zeros(trunc);
        if trunc.nu != self.trunc.nu {
            return out;
        }
        let lat = self.trunc.lattice();
        let nj = self.trunc.nj();
        let mut l = vec![0i64; self.trunc.nu];
        for li in 0..lat.len() {
            lat.point(li, &mut l);
            if lnorm(&l) > trunc.n_phi as i64 {
                continue;
            }
            for jj in 0..nj {
                let j = jj as i64 - self.trunc.n_x as i64;
                if let Some(k) = trunc.index(&l, j) {
                    out.coeffs[k] = self.coeffs[li * nj + jj];
                }
            }
        }
        out
    }

    fn zip(&self, other: &Self, f: impl Fn(C<T>, C<T>) -> C<T>) -> Result<Self> {
        if self.trunc != other.trunc {
            return Err(Error::Dimension("truncation mismatch".into()));
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| f(*a, *b)).collect();
        Ok(FourierField { trunc: self.trunc, coeffs })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: T) -> Self {
        self.map_coeffs(|_, _, c| c * s)
    }

    pub fn add_constant(&self, c: T) -> Self {
        let mut out = self.clone();
        let z = self.trunc.zero_index();
        out.coeffs[z].re = out.coeffs[z].re + c;
        out
    }

    /// Applies `f(l, j, u_{l,j})` to every coefficient.
    pub fn map_coeffs(&self, mut f: impl FnMut(&[i64], i64, C<T>) -> C<T>) -> Self {
        let lat = self.trunc.lattice();
        let nj = self.trunc.nj();
        let mut l = vec![0i64; self.trunc.nu];
        let mut coeffs = self.coeffs.clone();
        for li in 0..lat.len() {
            lat.point(li, &mut l);
            for jj in 0..nj {
                let j = jj as i64 - self.trunc.n_x as i64;
                let k = li * nj + jj;
                coeffs[k] = f(&l, j, coeffs[k]);
            }
        }
        FourierField { trunc: self.trunc, coeffs }
    }

    /// Real samples on the default oversampled grid.
    pub fn to_grid(&self) -> Vec<T> {
        synthesize(self, &GridShape::of(&self.trunc)).expect("default grid holds its truncation")
    }

    /// Samples on a given grid.
    pub fn to_grid_on(&self, shape: &GridShape) -> Result<Vec<T>> {
        synthesize(self, shape)
    }

    /// Applies a pointwise function on the default grid and re-analyzes.
    pub fn map_grid(&self, f: impl Fn(T) -> T) -> Self {
        let shape = GridShape::of(&self.trunc);
        let s: Vec<T> = self.to_grid().into_iter().map(f).collect();
        analyze(&s, &shape, &self.trunc).expect("default grid")
    }

    /// Pointwise product on the oversampled grid, truncated to `self`'s truncation.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        combine(&self.trunc, &[self, other], |v| v[0] * v[1])
    }

    /// Pointwise quotient on the oversampled grid.
    pub fn div(&self, other: &Self) -> Result<Self> {
        let guard = T::tol(1e-14);
        try_combine(&self.trunc, &[self, other], |v| {
            if v[1].abs() < guard {
                return Err(Error::Domain(format!("division by {} on the grid", v[1])));
            }
            Ok(v[0] / v[1])
        })
    }

    /// `∂_x^k` for `k >= 0`, `∂_x^{-1}` powers for `k < 0` (annihilating `j = 0`).
    pub fn dx_pow(&self, k: i32) -> Self {
        self.map_coeffs(|_, j, c| {
            if j == 0 {
                if k == 0 {
                    c
                } else {
                    C::zero()
                }
            } else if k >= 0 {
                c * ij_pow::<T>(j, k as u32)
            } else {
                c / ij_pow::<T>(j, (-k) as u32)
            }
        })
    }

    /// `ω·∂_φ`.
    pub fn omega_dphi(&self, freq: &Frequency<T>) -> Self {
        self.map_coeffs(|l, _, c| c * C::new(T::zero(), freq.dot(l)))
    }

    /// `(ω·∂_φ)^{-1}` on `l != 0`, zero on `l = 0`.
    pub fn omega_dphi_inv(&self, freq: &Frequency<T>) -> Result<Self> {
        let floor = freq.divisor_floor();
        let mut bad = None;
        let out = self.map_coeffs(|l, _, c| {
            if l.iter().all(|&v| v == 0) {
                return C::zero();
            }
            let d = freq.dot(l);
            if d.abs() < floor {
                bad = Some((l.to_vec(), d));
                return C::zero();
            }
            c / C::new(T::zero(), d)
        });
        if let Some((l, d)) = bad {
            return Err(Error::DivisorUnderflow { l, value: d.abs().as_f64(), floor: floor.as_f64() });
        }
        Ok(out)
    }

    /// `‖u‖_s`.
    pub fn sobolev_norm(&self, s: f64) -> T {
        let s = T::lit(s);
        let two = T::lit(2.0);
        let lat = self.trunc.lattice();
        let nj = self.trunc.nj();
        let mut l = vec![0i64; self.trunc.nu];
        let mut acc = T::zero();
        for li in 0..lat.len() {
            lat.point(li, &mut l);
            for jj in 0..nj {
                let c = self.coeffs[li * nj + jj];
                if c.is_zero() {
                    continue;
                }
                let j = jj as i64 - self.trunc.n_x as i64;
                let w = T::int(bracket(&l, j)).powf(two * s);
                acc = acc + w * c.norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// Largest coefficient modulus.
    pub fn max_coeff(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()))
    }

    /// Sup norm on the default grid.
    pub fn sup_norm(&self) -> T {
        self.to_grid().into_iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `Π_C u`, the mean over `T^{nu+1}`.
    pub fn mean(&self) -> T {
        self.coeffs[self.trunc.zero_index()].re
    }

    /// x-average as a function of φ (only `j = 0` kept).
    pub fn x_average(&self) -> Self {
        self.map_coeffs(|_, j, c| if j == 0 { c } else { C::zero() })
    }

    /// `π_0 u = u - x-average`.
    pub fn pi0(&self) -> Self {
        self.map_coeffs(|_, j, c| if j == 0 { C::zero() } else { c })
    }

    /// φ-average as a function of x (only `l = 0` kept).
    pub fn phi_average(&self) -> Self {
        self.map_coeffs(|l, _, c| if l.iter().all(|&v| v == 0) { c } else { C::zero() })
    }

    /// Zeroes `(l, j)` with `<l,j> > n` (the ball projector).
    pub fn project_ball(&self, n: usize) -> Self {
        self.map_coeffs(|l, j, c| if bracket(l, j) as usize <= n { c } else { C::zero() })
    }

    /// True when every `j != 0` coefficient vanishes.
    pub fn is_phi_only(&self, tol: T) -> bool {
        let scale = self.max_coeff().max(T::one());
        let nj = self.trunc.nj();
        self.coeffs
            .iter()
            .enumerate()
            .all(|(k, c)| k % nj == self.trunc.n_x || c.norm() <= tol * scale)
    }

    /// Projection on the even class X (real coefficients).
    pub fn even_part(&self) -> Self {
        self.map_coeffs(|_, _, c| C::new(c.re, T::zero()))
    }

    /// Projection on the odd class Y (imaginary coefficients).
    pub fn odd_part(&self) -> Self {
        self.map_coeffs(|_, _, c| C::new(T::zero(), c.im))
    }

    /// Symmetry flags at tolerance `1e-12 ‖u‖_{s0}`.
    pub fn structure(&self) -> StructureReport {
        let s0 = (self.trunc.nu as f64 + 2.0) / 2.0;
        let tol = T::tol(1e-12) * self.sobolev_norm(s0);
        let n = self.coeffs.len();
        let (mut real_def, mut x_def, mut y_def) = (T::zero(), T::zero(), T::zero());
        for i in 0..n {
            let a = self.coeffs[i];
            let b = self.coeffs[n - 1 - i];
            real_def = real_def.max((a - b.conj()).norm());
            x_def = x_def.max((a - b).norm());
            y_def = y_def.max((a + b).norm());
        }
        let nj = self.trunc.nj();
        let sa = (0..self.trunc.n_l()).fold(T::zero(), |m, li| m.max(self.coeffs[li * nj + self.trunc.n_x].norm()));
        StructureReport {
            is_real: real_def <= tol,
            in_x: x_def <= tol,
            in_y: y_def <= tol,
            zero_space_average: sa <= tol,
            zero_total_average: self.mean().abs() <= tol,
        }
    }

    /// Direct evaluation `Σ u_{l,j} e^{i(l·φ+jx)}` at one point.
    pub fn eval_at(&self, phi: &[T], x: T) -> T {
        let lat = self.trunc.lattice();
        let nj = self.trunc.nj();
        let mut l = vec![0i64; self.trunc.nu];
        let mut acc = T::zero();
        for li in 0..lat.len() {
            lat.point(li, &mut l);
            let lp = l.iter().zip(phi).fold(T::zero(), |a, (&li, &p)| a + T::int(li) * p);
            for jj in 0..nj {
                let c = self.coeffs[li * nj + jj];
                if c.is_zero() {
                    continue;
                }
                let j = jj as i64 - self.trunc.n_x as i64;
                let th = lp + T::int(j) * x;
                acc = acc + c.re * th.cos() - c.im * th.sin();
            }
        }
        acc
    }

    /// Random real field with modes `|l|, |j| <= band` and amplitudes
    /// `amp · exp(-decay <l,j>)`.
    pub fn random<R: Rng>(trunc: Truncation, band: usize, amp: f64, decay: f64, rng: &mut R) -> Self {
        let mut f = Self::zeros(trunc);
        let n = trunc.len();
        for i in 0..=n / 2 {
            let (l, j) = trunc.mode(i);
            if lnorm(&l) as usize > band || j.unsigned_abs() as usize > band {
                continue;
            }
            let w = amp * (-decay * bracket(&l, j) as f64).exp();
            let re = T::lit(w * rng.gen_range(-1.0..1.0));
            let im = T::lit(w * rng.gen_range(-1.0..1.0));
            let c = if i == n - 1 - i { C::new(re, T::zero()) } else { C::new(re, im) };
            f.coeffs[i] = c;
            f.coeffs[n - 1 - i] = c.conj();
        }
        f
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Identity check helper: `‖self - other‖_s`.
    pub fn distance(&self, other: &Self, s: f64) -> Result<T> {
        Ok(self.sub(other)?.sobolev_norm(s))
    }

    pub fn one(trunc: Truncation) -> Self {
        Self::constant(trunc, T::one())
    }
}

/// Evaluates a function of `(φ, x)` at every node of a grid.
pub fn grid_eval<T: Real, F: Fn(&[T], T) -> T>(shape: &GridShape, f: F) -> Vec<T> {
    let mut out = Vec::with_capacity(shape.total());
    let mut phi = vec![T::zero(); shape.nu];
    for p in 0..shape.n_phi_nodes() {
        shape.phi_node(p, &mut phi);
        for k in 0..shape.m_x {
            out.push(f(&phi, shape.x_node(k)));
        }
    }
    out
}

/// Pointwise combination of several fields on a common grid, analyzed into `out`.
///
/// The grid covers `out` and every input truncation, so products of inputs
/// whose bandwidths sum within the grid's alias-free range are exact.
pub fn combine<T: Real>(
    out: &Truncation,
    inputs: &[&FourierField<T>],
    f: impl Fn(&[T]) -> T,
) -> Result<FourierField<T>> {
    let truncs: Vec<&Truncation> = inputs.iter().map(|x| x.trunc()).collect();
    let shape = GridShape::covering(GridShape::of(out), &truncs);
    let samples: Vec<Vec<T>> = inputs.iter().map(|x| synthesize(x, &shape)).collect::<Result<_>>()?;
    let mut vals = vec![T::zero(); inputs.len()];
    let mut s = Vec::with_capacity(shape.total());
    for k in 0..shape.total() {
        for (v, col) in vals.iter_mut().zip(&samples) {
            *v = col[k];
        }
        s.push(f(&vals));
    }
    analyze(&s, &shape, out)
}

/// Like [`combine`] but the pointwise function may fail.
pub fn try_combine<T: Real>(
    out: &Truncation,
    inputs: &[&FourierField<T>],
    f: impl Fn(&[T]) -> Result<T>,
) -> Result<FourierField<T>> {
    let truncs: Vec<&Truncation> = inputs.iter().map(|x| x.trunc()).collect();
    let shape = GridShape::covering(GridShape::of(out), &truncs);
    let samples: Vec<Vec<T>> = inputs.iter().map(|x| synthesize(x, &shape)).collect::<Result<_>>()?;
    let mut vals = vec![T::zero(); inputs.len()];
    let mut s = Vec::with_capacity(shape.total());
    for k in 0..shape.total() {
        for (v, col) in vals.iter_mut().zip(&samples) {
            *v = col[k];
        }
        s.push(f(&vals)?);
    }
    analyze(&s, &shape, out)
}


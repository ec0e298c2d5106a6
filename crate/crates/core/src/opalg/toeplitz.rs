//! Operators Töplitz in time: `A^{(l₂,j₂)}_{(l₁,j₁)} = A^{j₂}_{j₁}(l₁ − l₂)`.

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::{Real, C};
use crate::spectral::{bracket, lnorm, s0, FourierField, Frequency, Lattice, Truncation};

/// Default bound on the flattened dimension of a materialized operator.
pub const MATERIALIZE_CAP: usize = 20000;
/// Maximal number of Neumann terms.
pub const NEUMANN_MAX_TERMS: usize = 60;
/// Series terms of the exponential are dropped below this decay norm.
const EXP_TERM_TOL: f64 = 1e-15;

/// Blocks `A(l)` for offsets `|l_i| <= 2 n_phi`, each an `nj x nj` matrix
/// `A(l)[j₁][j₂]` over `|j₁|, |j₂| <= n_x`.
#[derive(Clone, Debug, PartialEq)]
pub struct ToplitzOperator<T: Real> {
    trunc: Truncation,
    blocks: Vec<C<T>>,
}

/// Diagnostics of a Neumann inversion.
#[derive(Clone, Debug, Serialize)]
pub struct NeumannReport {
    pub terms: usize,
    /// `|Ψ|_{s₀}`.
    pub psi_norm: f64,
    /// Measured `|Ψ²|_{s₀} / |Ψ|_{s₀}²`, standing in for the unspecified
    /// interpolation constant.
    pub submult_ratio: f64,
    /// `|Φ Φ⁻¹ − I|_{s₀}` after refinement.
    pub residual: f64,
}

fn same_modes(a: &Truncation, b: &Truncation) -> bool {
    a.nu == b.nu && a.n_phi == b.n_phi && a.n_x == b.n_x
}

fn mode_error(a: &Truncation, b: &Truncation) -> Error {
    Error::Dimension(format!(
        "truncation mismatch: (nu {}, n_phi {}, n_x {}) vs (nu {}, n_phi {}, n_x {})",
        a.nu, a.n_phi, a.n_x, b.nu, b.n_phi, b.n_x
    ))
}

impl<T: Real> ToplitzOperator<T> {
    pub fn zero(trunc: Truncation) -> Self {
        let nj = trunc.nj();
        ToplitzOperator { trunc, blocks: vec![C::zero(); trunc.offset_lattice().len() * nj * nj] }
    }

    pub fn identity(trunc: Truncation) -> Self {
        Self::from_multiplier(trunc, |_| C::one())
    }

    /// Fourier multiplier `e^{ijx} -> m(j) e^{ijx}`.
    pub fn from_multiplier(trunc: Truncation, m: impl Fn(i64) -> C<T>) -> Self {
        let mut op = Self::zero(trunc);
        let nj = trunc.nj();
        let z = trunc.offset_lattice().zero_index();
        let n = trunc.n_x as i64;
        for jj in 0..nj {
            op.blocks[(z * nj + jj) * nj + jj] = m(jj as i64 - n);
        }
        op
    }

    /// Multiplication by `p`: `A(l)[j₁][j₂] = p_{l, j₁−j₂}`. `p` may carry
    /// more modes than `trunc`; those outside the offset range are ignored.
    pub fn from_multiplication(p: &FourierField<T>, trunc: Truncation) -> Result<Self> {
        if p.trunc().nu != trunc.nu {
            return Err(mode_error(p.trunc(), &trunc));
        }
        let mut op = Self::zero(trunc);
        let nj = trunc.nj();
        let n = trunc.n_x as i64;
        let lat = trunc.offset_lattice();
        let mut l = vec![0i64; trunc.nu];
        for li in 0..lat.len() {
            lat.point(li, &mut l);
            if lnorm(&l) as usize > p.trunc().n_phi {
                continue;
            }
            for j1 in -n..=n {
                for j2 in -n..=n {
                    let d = j1 - j2;
                    if d.unsigned_abs() as usize > p.trunc().n_x {
                        continue;
                    }
                    op.blocks[(li * nj + (j1 + n) as usize) * nj + (j2 + n) as usize] = p.get(&l, d);
                }
            }
        }
        Ok(op)
    }

    /// [`from_multiplication`](Self::from_multiplication) in `p`'s own truncation.
    pub fn multiplication(p: &FourierField<T>) -> Self {
        Self::from_multiplication(p, *p.trunc()).expect("same dimension")
    }

    pub fn trunc(&self) -> &Truncation {
        &self.trunc
    }

    pub fn nj(&self) -> usize {
        self.trunc.nj()
    }

    pub fn offsets(&self) -> Lattice {
        self.trunc.offset_lattice()
    }

    pub fn blocks(&self) -> &[C<T>] {
        &self.blocks
    }

    /// Block at flat offset index `o`.
    pub fn block(&self, o: usize) -> &[C<T>] {
        let b = self.nj() * self.nj();
        &self.blocks[o * b..(o + 1) * b]
    }

    pub fn block_mut(&mut self, o: usize) -> &mut [C<T>] {
        let b = self.nj() * self.nj();
        &mut self.blocks[o * b..(o + 1) * b]
    }

    /// `A(l)[j₁][j₂]`, zero outside the stored range.
    pub fn get(&self, l: &[i64], j1: i64, j2: i64) -> C<T> {
        let n = self.trunc.n_x as i64;
        if j1.abs() > n || j2.abs() > n {
            return C::zero();
        }
        match self.offsets().index(l) {
            Some(o) => self.block(o)[(j1 + n) as usize * self.nj() + (j2 + n) as usize],
            None => C::zero(),
        }
    }

    pub fn set(&mut self, l: &[i64], j1: i64, j2: i64, v: C<T>) -> Result<()> {
        let n = self.trunc.n_x as i64;
        let o = self.offsets().index(l).filter(|_| j1.abs() <= n && j2.abs() <= n);
        let o = o.ok_or_else(|| Error::Dimension(format!("entry ({l:?}, {j1}, {j2}) outside the operator")))?;
        let nj = self.nj();
        self.block_mut(o)[(j1 + n) as usize * nj + (j2 + n) as usize] = v;
        Ok(())
    }

    /// Builds an operator entrywise from `f(l, j₁, j₂)`.
    pub fn from_fn(trunc: Truncation, f: impl Fn(&[i64], i64, i64) -> C<T>) -> Self {
        let mut op = Self::zero(trunc);
        let nj = trunc.nj();
        let n = trunc.n_x as i64;
        let lat = trunc.offset_lattice();
        let mut l = vec![0i64; trunc.nu];
        for o in 0..lat.len() {
            lat.point(o, &mut l);
            for j1 in -n..=n {
                for j2 in -n..=n {
                    op.blocks[(o * nj + (j1 + n) as usize) * nj + (j2 + n) as usize] = f(&l, j1, j2);
                }
            }
        }
        op
    }

    /// Same offsets and modes padded with zeros or cut to `trunc`.
    pub fn resized(&self, trunc: Truncation) -> Self {
        let mut out = Self::zero(trunc);
        let n_new = trunc.n_x as i64;
        let n_old = self.trunc.n_x as i64;
        let n = n_new.min(n_old);
        let lat = trunc.offset_lattice();
        let old = self.offsets();
        let (nj_new, nj_old) = (trunc.nj(), self.nj());
        let mut l = vec![0i64; trunc.nu];
        for o in 0..lat.len() {
            lat.point(o, &mut l);
            let Some(q) = old.index(&l) else { continue };
            for j1 in -n..=n {
                for j2 in -n..=n {
                    out.blocks[(o * nj_new + (j1 + n_new) as usize) * nj_new + (j2 + n_new) as usize] =
                        self.blocks[(q * nj_old + (j1 + n_old) as usize) * nj_old + (j2 + n_old) as usize];
                }
            }
        }
        out
    }

    fn check(&self, other: &Truncation) -> Result<()> {
        if same_modes(&self.trunc, other) {
            Ok(())
        } else {
            Err(mode_error(&self.trunc, other))
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C<T>, C<T>) -> C<T>) -> Result<Self> {
        self.check(&other.trunc)?;
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(*a, *b)).collect();
        Ok(ToplitzOperator { trunc: self.trunc, blocks })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: T) -> Self {
        self.scale_c(C::new(s, T::zero()))
    }

    pub fn scale_c(&self, s: C<T>) -> Self {
        ToplitzOperator { trunc: self.trunc, blocks: self.blocks.iter().map(|a| *a * s).collect() }
    }

    /// Applies `f(l, j₁, j₂, A(l)[j₁][j₂])` to every entry.
    pub fn map_entries(&self, f: impl Fn(&[i64], i64, i64, C<T>) -> C<T>) -> Self {
        let nj = self.nj();
        let n = self.trunc.n_x as i64;
        let lat = self.offsets();
        let mut out = self.clone();
        let mut l = vec![0i64; self.trunc.nu];
        for o in 0..lat.len() {
            lat.point(o, &mut l);
            for j1 in 0..nj {
                for j2 in 0..nj {
                    let k = (o * nj + j1) * nj + j2;
                    out.blocks[k] = f(&l, j1 as i64 - n, j2 as i64 - n, self.blocks[k]);
                }
            }
        }
        out
    }

    /// `diag(m) A`.
    pub fn left_diag(&self, m: impl Fn(i64) -> C<T>) -> Self {
        self.map_entries(|_, j1, _, a| m(j1) * a)
    }

    /// `A diag(m)`.
    pub fn right_diag(&self, m: impl Fn(i64) -> C<T>) -> Self {
        self.map_entries(|_, _, j2, a| a * m(j2))
    }

    /// `[ω·∂_φ, A]`: blocks multiplied by `i ω·l`.
    pub fn omega_dphi_commutator(&self, freq: &Frequency<T>) -> Self {
        self.map_entries(|l, _, _, a| a * C::new(T::zero(), freq.dot(l)))
    }

    /// Diagonal of the `l = 0` block, `[A]` in the KAM scheme.
    pub fn diagonal_average(&self) -> Vec<C<T>> {
        let nj = self.nj();
        let b = self.block(self.offsets().zero_index());
        (0..nj).map(|j| b[j * nj + j]).collect()
    }

    fn nonzero_blocks(&self) -> Vec<bool> {
        let b = self.nj() * self.nj();
        self.blocks.chunks(b).map(|c| c.iter().any(|v| !v.is_zero())).collect()
    }

    fn block_norms(&self) -> Vec<T> {
        let b = self.nj() * self.nj();
        self.blocks.chunks(b).map(|c| c.iter().fold(T::zero(), |s, v| s + v.norm_sqr()).sqrt()).collect()
    }

    /// `(A u)_{l₁,j₁} = Σ A(l₁−l₂)[j₁][j₂] u_{l₂,j₂}`.
    pub fn apply(&self, u: &FourierField<T>) -> Result<FourierField<T>> {
        self.check(u.trunc())?;
        let tr = *u.trunc();
        let nj = tr.nj();
        let lat = tr.lattice();
        let off = self.offsets();
        let pts = lat.points();
        let nu = tr.nu;
        let nz = self.nonzero_blocks();
        let uc = u.coeffs();
        let rows: Vec<Vec<C<T>>> = (0..lat.len())
            .into_par_iter()
            .map(|l1| {
                let mut acc = vec![C::zero(); nj];
                let mut d = vec![0i64; nu];
                for l2 in 0..lat.len() {
                    for i in 0..nu {
                        d[i] = pts[l1 * nu + i] - pts[l2 * nu + i];
                    }
                    let o = off.index(&d).expect("difference of truncated indices is an offset");
                    if !nz[o] {
                        continue;
                    }
                    let blk = self.block(o);
                    let v = &uc[l2 * nj..(l2 + 1) * nj];
                    for (j1, a) in acc.iter_mut().enumerate() {
                        let row = &blk[j1 * nj..(j1 + 1) * nj];
                        *a = row.iter().zip(v).fold(*a, |s, (x, y)| s + *x * *y);
                    }
                }
                acc
            })
            .collect();
        FourierField::from_coeffs(tr, rows.concat())
    }

    /// `AB` with offsets truncated to `|l_i| <= 2 n_phi`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        Ok(self.compose_with_loss(other)?.0)
    }

    /// [`compose`](Self::compose) together with the bound
    /// `Σ |A(a)|_F |B(b)|_F` over dropped pairs `a + b` outside the range.
    pub fn compose_with_loss(&self, other: &Self) -> Result<(Self, T)> {
        self.check(&other.trunc)?;
        let nj = self.nj();
        let bsz = nj * nj;
        let off = self.offsets();
        let nu = self.trunc.nu;
        let pts = off.points();
        let a_nz: Vec<usize> = self.nonzero_blocks().iter().enumerate().filter(|(_, &z)| z).map(|(i, _)| i).collect();
        let b_nz = other.nonzero_blocks();
        let blocks: Vec<Vec<C<T>>> = (0..off.len())
            .into_par_iter()
            .map(|o| {
                let mut acc = vec![C::zero(); bsz];
                let mut d = vec![0i64; nu];
                for &a in &a_nz {
                    for i in 0..nu {
                        d[i] = pts[o * nu + i] - pts[a * nu + i];
                    }
                    let Some(b) = off.index(&d) else { continue };
                    if !b_nz[b] {
                        continue;
                    }
                    let ab = self.block(a);
                    let bb = other.block(b);
                    for j1 in 0..nj {
                        let out_row = &mut acc[j1 * nj..(j1 + 1) * nj];
                        for k in 0..nj {
                            let x = ab[j1 * nj + k];
                            if x.is_zero() {
                                continue;
                            }
                            for (o2, y) in out_row.iter_mut().zip(&bb[k * nj..(k + 1) * nj]) {
                                *o2 = *o2 + x * *y;
                            }
                        }
                    }
                }
                acc
            })
            .collect();
        let an = self.block_norms();
        let bn = other.block_norms();
        let mut lost = T::zero();
        let mut s = vec![0i64; nu];
        for &a in &a_nz {
            for (b, &bnorm) in bn.iter().enumerate() {
                if bnorm.is_zero() {
                    continue;
                }
                for i in 0..nu {
                    s[i] = pts[a * nu + i] + pts[b * nu + i];
                }
                if off.index(&s).is_none() {
                    lost = lost + an[a] * bnorm;
                }
            }
        }
        Ok((ToplitzOperator { trunc: self.trunc, blocks: blocks.concat() }, lost))
    }

    /// `|A|_s² = Σ_{l,j} sup_{j₁−j₂=j} |A(l)[j₁][j₂]|² <l,j>^{2s}`.
    pub fn decay_norm(&self, s: f64) -> T {
        let nj = self.nj();
        let n = self.trunc.n_x as i64;
        let off = self.offsets();
        let two_s = T::lit(2.0 * s);
        let mut l = vec![0i64; self.trunc.nu];
        let mut total = T::zero();
        let mut sup = vec![T::zero(); 2 * nj - 1];
        for o in 0..off.len() {
            let blk = self.block(o);
            if blk.iter().all(|v| v.is_zero()) {
                continue;
            }
            off.point(o, &mut l);
            sup.iter_mut().for_each(|v| *v = T::zero());
            for j1 in 0..nj {
                for j2 in 0..nj {
                    let k = j1 + nj - 1 - j2;
                    sup[k] = sup[k].max(blk[j1 * nj + j2].norm_sqr());
                }
            }
            for (k, &v) in sup.iter().enumerate() {
                if v.is_zero() {
                    continue;
                }
                let d = k as i64 - (2 * n);
                total = total + v * T::int(bracket(&l, d)).powf(two_s);
            }
        }
        total.sqrt()
    }

    /// `Π_N A`: blocks with `|l| > N` set to zero.
    pub fn smooth(&self, n: usize) -> Self {
        let mut out = self.clone();
        let off = self.offsets();
        let mut l = vec![0i64; self.trunc.nu];
        for o in 0..off.len() {
            off.point(o, &mut l);
            if lnorm(&l) as usize > n {
                out.block_mut(o).iter_mut().for_each(|v| *v = C::zero());
            }
        }
        out
    }

    /// `(I + Ψ)⁻¹` for `Ψ = self`, see [`neumann_inverse_report`](Self::neumann_inverse_report).
    pub fn neumann_inverse(&self, tol: f64) -> Result<Self> {
        Ok(self.neumann_inverse_report(tol, true)?.0)
    }

    /// Neumann series `Σ (−Ψ)^k` until the term norm drops below `tol`,
    /// optionally refined by one Newton-Schulz step `X(2I − ΦX)`.
    pub fn neumann_inverse_report(&self, tol: f64, refine: bool) -> Result<(Self, NeumannReport)> {
        let s = s0(self.trunc.nu);
        let psi_norm = self.decay_norm(s);
        if psi_norm >= T::lit(0.5) {
            return Err(Error::Contraction { what: "Neumann series", norm: psi_norm.as_f64(), bound: 0.5 });
        }
        let id = Self::identity(self.trunc);
        let neg = self.scale(-T::one());
        let mut x = id.clone();
        let mut term = id.clone();
        let mut terms = 0;
        let mut submult_ratio = 0.0;
        let tol_t = T::lit(tol);
        while term.decay_norm(s) >= tol_t {
            if terms == NEUMANN_MAX_TERMS {
                return Err(Error::NoConvergence {
                    what: "Neumann series",
                    iterations: terms,
                    residual: term.decay_norm(s).as_f64(),
                });
            }
            term = neg.compose(&term)?;
            if terms == 1 && psi_norm > T::zero() {
                submult_ratio = (term.decay_norm(s) / (psi_norm * psi_norm)).as_f64();
            }
            x = x.add(&term)?;
            terms += 1;
        }
        let phi = id.add(self)?;
        if refine {
            let two = id.scale(T::lit(2.0));
            x = x.compose(&two.sub(&phi.compose(&x)?)?)?;
        }
        let residual = phi.compose(&x)?.sub(&id)?.decay_norm(s).as_f64();
        Ok((x, NeumannReport { terms, psi_norm: psi_norm.as_f64(), submult_ratio, residual }))
    }

    /// `exp(Ψ)` by scaling and squaring of the Taylor series.
    pub fn exp(&self) -> Result<Self> {
        let s = s0(self.trunc.nu);
        let norm = self.decay_norm(s);
        if norm > T::one() {
            return Err(Error::Contraction { what: "matrix exponential", norm: norm.as_f64(), bound: 1.0 });
        }
        let mut squarings = 0u32;
        let mut scaled = norm;
        while scaled > T::lit(0.25) {
            scaled = scaled / T::lit(2.0);
            squarings += 1;
        }
        let x = self.scale(T::lit(0.5f64.powi(squarings as i32)));
        let mut out = Self::identity(self.trunc);
        let mut term = out.clone();
        for k in 1..=60 {
            term = x.compose(&term)?.scale(T::one() / T::int(k));
            out = out.add(&term)?;
            if term.decay_norm(s) < T::lit(EXP_TERM_TOL) {
                break;
            }
        }
        for _ in 0..squarings {
            out = out.compose(&out)?;
        }
        Ok(out)
    }

    /// Dense matrix over the flattened `(l, j)` index, plus `i ω·l₁` on the
    /// diagonal when `freq` is given.
    pub fn materialize(&self, freq: Option<&Frequency<T>>, cap: usize) -> Result<DenseMatrix<T>> {
        let tr = self.trunc;
        let dim = tr.len();
        if dim > cap {
            return Err(Error::CapExceeded { dim, cap });
        }
        let nj = tr.nj();
        let lat = tr.lattice();
        let off = self.offsets();
        let pts = lat.points();
        let nu = tr.nu;
        let mut m = DenseMatrix::zeros(dim, dim);
        let mut d = vec![0i64; nu];
        for l1 in 0..lat.len() {
            for l2 in 0..lat.len() {
                for i in 0..nu {
                    d[i] = pts[l1 * nu + i] - pts[l2 * nu + i];
                }
                let blk = self.block(off.index(&d).expect("offset in range"));
                for j1 in 0..nj {
                    for j2 in 0..nj {
                        m.set(l1 * nj + j1, l2 * nj + j2, blk[j1 * nj + j2]);
                    }
                }
            }
            if let Some(f) = freq {
                let w = f.dot(&pts[l1 * nu..(l1 + 1) * nu]);
                for j in 0..nj {
                    let k = l1 * nj + j;
                    m.set(k, k, m.get(k, k) + C::new(T::zero(), w));
                }
            }
        }
        Ok(m)
    }

    /// `A(φ) = Σ_l A(l) e^{i l·φ}` acting on x-modes `|j| <= n_x`.
    pub fn frozen(&self, phi: &[T]) -> DenseMatrix<T> {
        let nj = self.nj();
        let off = self.offsets();
        let mut l = vec![0i64; self.trunc.nu];
        let mut out = vec![C::zero(); nj * nj];
        for o in 0..off.len() {
            let blk = self.block(o);
            if blk.iter().all(|v| v.is_zero()) {
                continue;
            }
            off.point(o, &mut l);
            let th = l.iter().zip(phi).fold(T::zero(), |s, (&a, &p)| s + T::int(a) * p);
            let e = C::new(th.cos(), th.sin());
            for (o2, b) in out.iter_mut().zip(blk) {
                *o2 = *o2 + *b * e;
            }
        }
        DenseMatrix::from_row_major(nj, nj, out).expect("square")
    }

    fn symmetry_defect(&self, f: impl Fn(C<T>, C<T>) -> T) -> T {
        let nj = self.nj();
        let len = self.offsets().len();
        let mut worst = T::zero();
        for o in 0..len {
            let a = self.block(o);
            let b = self.block(len - 1 - o);
            for j1 in 0..nj {
                for j2 in 0..nj {
                    worst = worst.max(f(a[j1 * nj + j2], b[(nj - 1 - j1) * nj + nj - 1 - j2]));
                }
            }
        }
        worst
    }

    fn scale_for_tol(&self) -> T {
        self.blocks.iter().fold(T::zero(), |m, v| m.max(v.norm())).max(T::one())
    }

    /// `conj(A(l)[j][k]) = A(−l)[−j][−k]`: maps real functions to real functions.
    pub fn is_real(&self, tol: f64) -> bool {
        self.symmetry_defect(|a, b| (a.conj() - b).norm()) <= T::lit(tol) * self.scale_for_tol()
    }

    /// `A(−l)[−j][−k] = A(l)[j][k]`: maps X to X and Y to Y.
    pub fn is_reversibility_preserving(&self, tol: f64) -> bool {
        self.symmetry_defect(|a, b| (a - b).norm()) <= T::lit(tol) * self.scale_for_tol()
    }

    /// `A(−l)[−j][−k] = −A(l)[j][k]`: maps X to Y and Y to X.
    pub fn is_reversible(&self, tol: f64) -> bool {
        self.symmetry_defect(|a, b| (a + b).norm()) <= T::lit(tol) * self.scale_for_tol()
    }

    /// `max |conj(A(l)[j][k]) − A(−l)[−j][−k]|`.
    pub fn reality_defect(&self) -> T {
        self.symmetry_defect(|a, b| (a.conj() - b).norm())
    }

    /// `max |A(l)[j][k] − A(−l)[−j][−k]|`.
    pub fn reversibility_preserving_defect(&self) -> T {
        self.symmetry_defect(|a, b| (a - b).norm())
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> T {
        self.blocks.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    pub fn to_json(&self) -> ToplitzJson {
        let nj = self.nj();
        let off = self.offsets();
        let blocks = (0..off.len())
            .filter(|&o| self.block(o).iter().any(|v| !v.is_zero()))
            .map(|o| {
                let b = self.block(o);
                let rows = (0..nj).map(|j| (0..nj).map(|k| [b[j * nj + k].re.as_f64(), b[j * nj + k].im.as_f64()]).collect()).collect();
                (off.point_vec(o), rows)
            })
            .collect();
        ToplitzJson { trunc: self.trunc, blocks }
    }

    pub fn from_json(js: &ToplitzJson) -> Result<Self> {
        let mut op = Self::zero(js.trunc);
        let nj = op.nj();
        for (l, rows) in &js.blocks {
            let o = op.offsets().index(l).ok_or_else(|| Error::Dimension(format!("offset {l:?} outside range")))?;
            if rows.len() != nj || rows.iter().any(|r| r.len() != nj) {
                return Err(Error::Dimension(format!("block at {l:?} is not {nj}x{nj}")));
            }
            let blk = op.block_mut(o);
            for (j, r) in rows.iter().enumerate() {
                for (k, v) in r.iter().enumerate() {
                    blk[j * nj + k] = C::new(T::lit(v[0]), T::lit(v[1]));
                }
            }
        }
        Ok(op)
    }
}

/// Operator dump `{trunc, blocks: [[l, [[re, im]; nj]; nj], ...]}` listing
/// nonzero blocks only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToplitzJson {
    pub trunc: Truncation,
    #[allow(clippy::type_complexity)]
    pub blocks: Vec<(Vec<i64>, Vec<Vec<[f64; 2]>>)>,
}

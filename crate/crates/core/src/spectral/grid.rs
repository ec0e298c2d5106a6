//! Equispaced grids on `T^nu x T` and the FFT-based transforms between
//! samples and truncated coefficients.

use num_traits::Zero;
use rustfft::FftPlanner;

use super::field::FourierField;
use super::truncation::Truncation;
use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Grid with `m_phi` nodes per φ direction and `m_x` nodes in x, row-major
/// with x fastest.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridShape {
    pub nu: usize,
    pub m_phi: usize,
    pub m_x: usize,
}

impl GridShape {
    /// Default oversampled grid of a truncation.
    pub fn of(trunc: &Truncation) -> Self {
        GridShape { nu: trunc.nu, m_phi: trunc.grid_phi(), m_x: trunc.grid_x() }
    }

    /// Smallest grid able to represent every listed truncation without
    /// aliasing of its own modes, at least as large as `base`.
    pub fn covering(base: GridShape, truncs: &[&Truncation]) -> Self {
        let mut g = base;
        for t in truncs {
            let o = GridShape::of(t);
            g.m_phi = g.m_phi.max(o.m_phi);
            g.m_x = g.m_x.max(o.m_x);
        }
        g
    }

    pub fn n_phi_nodes(&self) -> usize {
        self.m_phi.pow(self.nu as u32)
    }

    pub fn total(&self) -> usize {
        self.n_phi_nodes() * self.m_x
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.m_phi; self.nu];
        d.push(self.m_x);
        d
    }

    /// φ coordinates of the φ-node with flat index `p`.
    pub fn phi_node<T: Real>(&self, mut p: usize, out: &mut [T]) {
        let h = T::lit(2.0 * std::f64::consts::PI / self.m_phi as f64);
        for i in (0..self.nu).rev() {
            out[i] = h * T::int((p % self.m_phi) as i64);
            p /= self.m_phi;
        }
    }

    pub fn x_node<T: Real>(&self, k: usize) -> T {
        T::lit(2.0 * std::f64::consts::PI * k as f64 / self.m_x as f64)
    }

    fn check(&self, trunc: &Truncation) -> Result<()> {
        if self.nu != trunc.nu || self.m_phi < 2 * trunc.n_phi + 1 || self.m_x < 2 * trunc.n_x + 1 {
            return Err(Error::Dimension(format!(
                "grid {}x{} (nu={}) cannot hold truncation n_phi={}, n_x={}, nu={}",
                self.m_phi, self.m_x, self.nu, trunc.n_phi, trunc.n_x, trunc.nu
            )));
        }
        Ok(())
    }
}

/// In-place multi-dimensional FFT along the selected axes.
///
/// Forward uses `e^{-i k θ}`, inverse uses `e^{+i k θ}`; neither normalizes.
pub fn fft_axes<T: Real>(data: &mut [C<T>], dims: &[usize], axes: &[usize], inverse: bool) {
    let mut planner = FftPlanner::<T>::new();
    let total: usize = dims.iter().product();
    debug_assert_eq!(total, data.len());
    for &axis in axes {
        let n = dims[axis];
        if n <= 1 {
            continue;
        }
        let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
        let stride: usize = dims[axis + 1..].iter().product();
        if stride == 1 {
            fft.process(data);
            continue;
        }
        let outer = total / (n * stride);
        let mut lane = vec![C::zero(); n];
        for o in 0..outer {
            for i in 0..stride {
                let base = o * n * stride + i;
                for k in 0..n {
                    lane[k] = data[base + k * stride];
                }
                fft.process(&mut lane);
                for k in 0..n {
                    data[base + k * stride] = lane[k];
                }
            }
        }
    }
}

fn wrap(k: i64, m: usize) -> usize {
    k.rem_euclid(m as i64) as usize
}

/// Flat grid index of the wrapped frequency `(l, j)`.
fn grid_slot(shape: &GridShape, l: &[i64], j: i64) -> usize {
    let mut idx = 0usize;
    for &li in l {
        idx = idx * shape.m_phi + wrap(li, shape.m_phi);
    }
    idx * shape.m_x + wrap(j, shape.m_x)
}

/// Complex samples `Σ u_{l,j} e^{i(l·φ + j x)}` on the grid.
pub fn synthesize_complex<T: Real>(field: &FourierField<T>, shape: &GridShape) -> Result<Vec<C<T>>> {
    let trunc = field.trunc();
    shape.check(trunc)?;
    let mut data = vec![C::zero(); shape.total()];
    let lat = trunc.lattice();
    let nj = trunc.nj();
    let mut l = vec![0i64; trunc.nu];
    for li in 0..lat.len() {
        lat.point(li, &mut l);
        for (jj, c) in field.coeffs()[li * nj..(li + 1) * nj].iter().enumerate() {
            let j = jj as i64 - trunc.n_x as i64;
            data[grid_slot(shape, &l, j)] = *c;
        }
    }
    let axes: Vec<usize> = (0..=shape.nu).collect();
    fft_axes(&mut data, &shape.dims(), &axes, true);
    Ok(data)
}

/// Real samples of a field on the grid.
pub fn synthesize<T: Real>(field: &FourierField<T>, shape: &GridShape) -> Result<Vec<T>> {
    Ok(synthesize_complex(field, shape)?.into_iter().map(|c| c.re).collect())
}

/// Coefficients within `trunc` of real grid samples.
pub fn analyze<T: Real>(samples: &[T], shape: &GridShape, trunc: &Truncation) -> Result<FourierField<T>> {
    if samples.len() != shape.total() {
        return Err(Error::Dimension(format!("expected {} samples, got {}", shape.total(), samples.len())));
    }
    let data: Vec<C<T>> = samples.iter().map(|&s| C::new(s, T::zero())).collect();
    analyze_data(data, shape, trunc)
}

/// Coefficients of complex samples; errors if the samples are not real.
pub fn analyze_complex<T: Real>(
    samples: &[C<T>],
    shape: &GridShape,
    trunc: &Truncation,
) -> Result<FourierField<T>> {
    if samples.len() != shape.total() {
        return Err(Error::Dimension(format!("expected {} samples, got {}", shape.total(), samples.len())));
    }
    let scale = samples.iter().fold(T::one(), |m, c| m.max(c.norm()));
    let max_im = samples.iter().fold(T::zero(), |m, c| m.max(c.im.abs()));
    if max_im > T::tol(1e-12) * scale {
        return Err(Error::NonReal(max_im.as_f64()));
    }
    analyze(&samples.iter().map(|c| c.re).collect::<Vec<_>>(), shape, trunc)
}

fn analyze_data<T: Real>(mut data: Vec<C<T>>, shape: &GridShape, trunc: &Truncation) -> Result<FourierField<T>> {
    shape.check(trunc)?;
    let axes: Vec<usize> = (0..=shape.nu).collect();
    fft_axes(&mut data, &shape.dims(), &axes, false);
    let inv = T::one() / T::int(shape.total() as i64);
    let lat = trunc.lattice();
    let nj = trunc.nj();
    let mut coeffs = vec![C::zero(); trunc.len()];
    let mut l = vec![0i64; trunc.nu];
    for li in 0..lat.len() {
        lat.point(li, &mut l);
        for jj in 0..nj {
            let j = jj as i64 - trunc.n_x as i64;
            coeffs[li * nj + jj] = data[grid_slot(shape, &l, j)] * inv;
        }
    }
    let mut f = FourierField::from_coeffs(*trunc, coeffs)?;
    f.symmetrize();
    Ok(f)
}

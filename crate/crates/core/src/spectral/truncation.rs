use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cube `{l in Z^nu : |l_i| <= radius}` enumerated in row-major order.
///
/// Because the range is symmetric, `index(-l) == len() - 1 - index(l)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lattice {
    pub nu: usize,
    pub radius: usize,
}

impl Lattice {
    pub fn new(nu: usize, radius: usize) -> Self {
        Lattice { nu, radius }
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.nu as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, l: &[i64]) -> Option<usize> {
        let r = self.radius as i64;
        let side = self.side();
        let mut idx = 0usize;
        for &li in l {
            if li.abs() > r {
                return None;
            }
            idx = idx * side + (li + r) as usize;
        }
        Some(idx)
    }

    pub fn point(&self, mut idx: usize, out: &mut [i64]) {
        let side = self.side();
        let r = self.radius as i64;
        for i in (0..self.nu).rev() {
            out[i] = (idx % side) as i64 - r;
            idx /= side;
        }
    }

    pub fn point_vec(&self, idx: usize) -> Vec<i64> {
        let mut v = vec![0; self.nu];
        self.point(idx, &mut v);
        v
    }

    /// All points flattened, `nu` integers per point.
    pub fn points(&self) -> Vec<i64> {
        let mut out = vec![0; self.len() * self.nu];
        for idx in 0..self.len() {
            self.point(idx, &mut out[idx * self.nu..(idx + 1) * self.nu]);
        }
        out
    }

    pub fn neg(&self, idx: usize) -> usize {
        self.len() - 1 - idx
    }

    pub fn zero_index(&self) -> usize {
        (self.len() - 1) / 2
    }
}

/// Max-norm of an integer vector.
pub fn lnorm(l: &[i64]) -> i64 {
    l.iter().map(|v| v.abs()).max().unwrap_or(0)
}

/// `<l, j> = max(1, |l|, |j|)` with the max-norm on `l`.
pub fn bracket(l: &[i64], j: i64) -> i64 {
    lnorm(l).max(j.abs()).max(1)
}

/// Rectangular Fourier truncation `|l_i| <= n_phi`, `|j| <= n_x` on `T^nu x T`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    pub nu: usize,
    pub n_phi: usize,
    pub n_x: usize,
    pub oversample: usize,
}

impl Truncation {
    pub fn new(nu: usize, n_phi: usize, n_x: usize, oversample: usize) -> Result<Self> {
        if nu == 0 || nu > 9 {
            return Err(Error::InvalidParameter(format!("nu = {nu} must be in 1..=9")));
        }
        if n_x == 0 {
            return Err(Error::InvalidParameter("n_x must be at least 1".into()));
        }
        if oversample < 2 {
            return Err(Error::InvalidParameter("oversample must be at least 2".into()));
        }
        Ok(Truncation { nu, n_phi, n_x, oversample })
    }

    /// Same truncation with different mode counts.
    pub fn with_modes(&self, n_phi: usize, n_x: usize) -> Self {
        Truncation { n_phi, n_x, ..*self }
    }

    /// Truncation with both mode counts multiplied by `k`.
    pub fn widened(&self, k: usize) -> Self {
        self.with_modes(self.n_phi * k, self.n_x * k)
    }

    pub fn lattice(&self) -> Lattice {
        Lattice::new(self.nu, self.n_phi)
    }

    /// Lattice of Töplitz block offsets `|l_i| <= 2 n_phi`.
    pub fn offset_lattice(&self) -> Lattice {
        Lattice::new(self.nu, 2 * self.n_phi)
    }

    pub fn nj(&self) -> usize {
        2 * self.n_x + 1
    }

    pub fn n_l(&self) -> usize {
        self.lattice().len()
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.n_l() * self.nj()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, l: &[i64], j: i64) -> Option<usize> {
        if j.unsigned_abs() as usize > self.n_x {
            return None;
        }
        let li = self.lattice().index(l)?;
        Some(li * self.nj() + (j + self.n_x as i64) as usize)
    }

    /// Decodes a flat index into `(l, j)`.
    pub fn mode(&self, idx: usize) -> (Vec<i64>, i64) {
        let nj = self.nj();
        let l = self.lattice().point_vec(idx / nj);
        (l, (idx % nj) as i64 - self.n_x as i64)
    }

    /// Index of the conjugate partner `(-l, -j)`.
    pub fn neg(&self, idx: usize) -> usize {
        self.len() - 1 - idx
    }

    fn grid_size(&self, n: usize) -> usize {
        let m = self.oversample * (2 * n + 1);
        m + (m % 2)
    }

    /// Grid points per φ direction.
    pub fn grid_phi(&self) -> usize {
        self.grid_size(self.n_phi)
    }

    /// Grid points in x.
    pub fn grid_x(&self) -> usize {
        self.grid_size(self.n_x)
    }

    /// Index of the mode `(0, 0)`.
    pub fn zero_index(&self) -> usize {
        (self.len() - 1) / 2
    }
}

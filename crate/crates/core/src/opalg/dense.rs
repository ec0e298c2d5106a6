//! Small dense complex matrices: products and LU solves.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![C::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C<T>] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C<T> {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C<T>) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[C<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!("{}x{} times {}x{}", self.rows, self.cols, other.rows, other.cols)));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                for (o, b) in orow.iter_mut().zip(other.row(k)) {
                    *o = *o + a * *b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[C<T>]) -> Result<Vec<C<T>>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!("vector of length {} for {} columns", v.len(), self.cols)));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(C::zero(), |acc, (a, b)| acc + *a * *b))
            .collect())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C<T>, C<T>) -> C<T>) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension("matrix shapes differ".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect();
        Ok(DenseMatrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: C<T>) -> Self {
        DenseMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| *a * s).collect() }
    }

    pub fn norm_fro(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr()).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, a| acc.max(a.norm()))
    }

    /// LU factorization with partial pivoting.
    pub fn lu(&self) -> Result<Lu<T>> {
        if self.rows != self.cols {
            return Err(Error::Dimension("LU of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = self.max_abs().max(T::min_positive_value());
        for k in 0..n {
            let (p, pv) = (k..n).map(|i| (i, a[i * n + k].norm())).fold((k, -T::one()), |m, x| if x.1 > m.1 { x } else { m });
            if pv <= T::epsilon() * scale {
                return Err(Error::Domain(format!("singular matrix at pivot {k}")));
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let d = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / d;
                a[i * n + k] = f;
                if f.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let v = a[k * n + j];
                    a[i * n + j] = a[i * n + j] - f * v;
                }
            }
        }
        Ok(Lu { n, a, perm })
    }

    pub fn inverse(&self) -> Result<Self> {
        let lu = self.lu()?;
        let n = self.rows;
        let mut out = Self::zeros(n, n);
        let mut e = vec![C::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = C::zero());
            e[j] = C::one();
            let col = lu.solve(&e)?;
            for i in 0..n {
                out.data[i * n + j] = col[i];
            }
        }
        Ok(out)
    }
}

/// `P A = L U` with unit-diagonal `L` stored below the diagonal.
#[derive(Clone, Debug)]
pub struct Lu<T: Real> {
    n: usize,
    a: Vec<C<T>>,
    perm: Vec<usize>,
}

impl<T: Real> Lu<T> {
    pub fn solve(&self, b: &[C<T>]) -> Result<Vec<C<T>>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::Dimension(format!("right-hand side of length {} for n = {n}", b.len())));
        }
        let mut x: Vec<C<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s = s - self.a[i * n + k] * x[k];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s = s - self.a[i * n + k] * x[k];
            }
            x[i] = s / self.a[i * n + i];
        }
        Ok(x)
    }
}

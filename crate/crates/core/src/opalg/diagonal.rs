//! Diagonal operators `e^{ijx} -> μ_j e^{ijx}`.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::toeplitz::ToplitzOperator;
use crate::error::{Error, Result};
use crate::scalar::{Real, C};
use crate::spectral::{FourierField, Truncation};

/// `D = diag_j μ_j` for `|j| <= n_x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalOperator<T: Real> {
    n_x: usize,
    mu: Vec<C<T>>,
}

impl<T: Real> DiagonalOperator<T> {
    pub fn new(n_x: usize, mu: Vec<C<T>>) -> Result<Self> {
        if mu.len() != 2 * n_x + 1 {
            return Err(Error::Dimension(format!("{} eigenvalues for n_x = {n_x}", mu.len())));
        }
        Ok(DiagonalOperator { n_x, mu })
    }

    pub fn from_fn(n_x: usize, f: impl Fn(i64) -> C<T>) -> Self {
        let n = n_x as i64;
        DiagonalOperator { n_x, mu: (-n..=n).map(f).collect() }
    }

    /// `m₃ ∂_x³ + m₁ ∂_x`: `μ_j = i(−m₃ j³ + m₁ j)`.
    pub fn dispersive(n_x: usize, m3: T, m1: T) -> Self {
        Self::from_fn(n_x, |j| {
            let jj = T::int(j);
            C::new(T::zero(), -m3 * jj * jj * jj + m1 * jj)
        })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn mu(&self) -> &[C<T>] {
        &self.mu
    }

    pub fn get(&self, j: i64) -> C<T> {
        if j.unsigned_abs() as usize > self.n_x {
            return C::zero();
        }
        self.mu[(j + self.n_x as i64) as usize]
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n_x != other.n_x {
            return Err(Error::Dimension("diagonal operators of different size".into()));
        }
        Ok(DiagonalOperator { n_x: self.n_x, mu: self.mu.iter().zip(&other.mu).map(|(a, b)| *a + *b).collect() })
    }

    /// `(D u)_{l,j} = μ_j u_{l,j}`.
    pub fn apply(&self, u: &FourierField<T>) -> Result<FourierField<T>> {
        if u.trunc().n_x != self.n_x {
            return Err(Error::Dimension(format!("diagonal of size {} on field with n_x = {}", self.n_x, u.trunc().n_x)));
        }
        Ok(u.map_coeffs(|_, j, c| c * self.get(j)))
    }

    /// `μ_j = conj(μ_{−j})`.
    pub fn is_real(&self, tol: f64) -> bool {
        let n = self.n_x as i64;
        (-n..=n).all(|j| (self.get(j) - self.get(-j).conj()).norm() <= T::lit(tol) * self.get(j).norm().max(T::one()))
    }

    pub fn to_toeplitz(&self, trunc: Truncation) -> Result<ToplitzOperator<T>> {
        if trunc.n_x != self.n_x {
            return Err(Error::Dimension("diagonal size differs from truncation".into()));
        }
        Ok(ToplitzOperator::from_multiplier(trunc, |j| self.get(j)))
    }

    pub fn max_abs_real_part(&self) -> T {
        self.mu.iter().fold(T::zero(), |m, v| m.max(v.re.abs()))
    }
}

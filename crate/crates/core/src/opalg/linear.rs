use super::toeplitz::ToplitzOperator;
use crate::error::Result;
use crate::nonlin::LinearizedOperator;
use crate::scalar::{ij_pow, Real};
use crate::spectral::Truncation;

impl<T: Real> LinearizedOperator<T> {
    /// `∂_x³ + Σ_k a_k ∂_x^k` as an operator on `trunc`; the `ω·∂_φ` part is
    /// added by [`ToplitzOperator::materialize`].
    pub fn to_toeplitz(&self, trunc: Truncation) -> Result<ToplitzOperator<T>> {
        let mut op = ToplitzOperator::from_multiplier(trunc, |j| ij_pow(j, 3));
        for k in 0..4u32 {
            let m = ToplitzOperator::from_multiplication(self.coeff(k as usize), trunc)?;
            op = op.add(&m.right_diag(|j| ij_pow(j, k)))?;
        }
        Ok(op)
    }
}

//! Operator algebra for matrices Töplitz in time, diagonal operators and
//! small dense matrices used by the oracles.

mod dense;
mod diagonal;
mod linear;
mod toeplitz;

pub use dense::{DenseMatrix, Lu};
pub use diagonal::DiagonalOperator;
pub use toeplitz::{NeumannReport, ToplitzJson, ToplitzOperator, MATERIALIZE_CAP, NEUMANN_MAX_TERMS};

//! Quasi-periodic solutions of quasi-periodically forced KdV equations
//!
//! `ω·∂_φ u + u_xxx + ε f(φ, x, u, u_x, u_xx, u_xxx) = 0` on `T^ν x T`.
//!
//! The pipeline regularizes the linearized operator to constant coefficients
//! up to a bounded remainder ([`regularize`]), diagonalizes it by a quadratic
//! KAM scheme ([`kamreduce`]), inverts it inside a Nash-Moser iteration
//! ([`solver`]) and checks linear stability by time integration
//! ([`dynamics`]). Numerical code is generic over [`Real`] (`f32`/`f64`);
//! the aliases below fix `f64`.

pub mod dynamics;
pub mod error;
pub mod kamreduce;
pub mod scalar;
pub mod nonlin;
pub mod opalg;
pub mod regularize;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::{Real, C};

/// Double-precision field.
pub type Field = spectral::FourierField<f64>;
/// Double-precision frequency.
pub type Freq = spectral::Frequency<f64>;

//! Truncated Fourier fields on `T^nu x T`, Sobolev norms, spectral calculus
//! and torus-diffeomorphism compositions.

mod compose;
mod field;
mod frequency;
mod grid;
mod json;
mod truncation;

pub use compose::{compose, compose_into, diffeo_derivative_sup, invert_torus_diffeo, translate_x, DiffeoKind};
pub use field::{combine, grid_eval, try_combine, FourierField, StructureReport};
pub use frequency::{preset_omega_bar, Frequency};
pub use grid::{analyze, analyze_complex, fft_axes, synthesize, synthesize_complex, GridShape};
pub use json::FieldJson;
pub use truncation::{bracket, lnorm, Lattice, Truncation};

/// `s0 = (nu + 2) / 2`.
pub fn s0(nu: usize) -> f64 {
    (nu as f64 + 2.0) / 2.0
}

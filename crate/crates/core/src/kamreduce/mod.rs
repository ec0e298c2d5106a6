//! Quadratic KAM reducibility of `L₅ = ω·∂_φ + D₀ + R₀` to the diagonal
//! operator `ω·∂_φ + D∞`, with Melnikov masks over the parameter λ.

mod homological;
mod melnikov;
mod scheme;

pub use homological::{homological_residual, solve_homological, support_defect, DivisorViolation, HomologicalSolution};
pub use melnikov::{
    eigenvalue_report, lambda_grid, mask_fraction, match_eigenvalues, melnikov_mask, melnikov_violation, EigenvalueReport,
    MelnikovOrder, SpectrumMatch, LOCALITY_FACTOR,
};
pub use scheme::{kam_step, reduce, reduce_operator, IterationSchedule, ReducibilityState, Reduction, StepTrace};

//! Right inverse of the linearized operator, the Nash-Moser iteration and
//! the λ-measure scan.

mod inverse;
mod measure;
mod newton;

pub use inverse::{diag_inverse, right_inverse, Admissible, InverseReport, Linearization, AVERAGE_TOL};
pub use measure::{baseline_mask, cantor_measure, GammaRule, MeasureReport};
pub use newton::{
    admissible_class, linearize, nash_moser, order_estimate, Iterate, NashMoserConfig, SolveReport, SolveSummary,
};

//! Nonlinearities `f(φ, x, z₀, z₁, z₂, z₃)`: parsing, residual evaluation,
//! linearization and structural hypotheses.

pub mod ast;
mod eval;
pub mod parser;
mod spec;
mod structure;

pub use ast::{Expr, Var};
pub use eval::{linearized_coefficients, nonlinear_term, residual, residual_into, Jet, LinearizedOperator};
pub use parser::parse;
pub use spec::{DeclaredForm, NonlinearitySpec, BUILTINS};
pub use structure::{structure_flags, Alpha, StructureFlags, PROBES, PROBE_TOL};

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("samples are not real: max imaginary part {0:e}")]
    NonReal(f64),
    #[error("divisor underflow at l = {l:?}: |omega.l| = {value:e} below floor {floor:e}")]
    DivisorUnderflow { l: Vec<i64>, value: f64, floor: f64 },
    #[error("diophantine witness fails at l = {l:?}: |omega_bar.l| = {value:e} < {bound:e}")]
    NotDiophantine { l: Vec<i64>, value: f64, bound: f64 },
    #[error("degenerate diffeomorphism: sup |{what}| = {value} exceeds 1/2")]
    DegenerateDiffeo { what: &'static str, value: f64 },
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { what: &'static str, iterations: usize, residual: f64 },
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier '{name}' at offset {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("non-integer exponent at offset {pos}")]
    NonIntegerExponent { pos: usize },
    #[error("evaluation domain error: {0}")]
    Domain(String),
    #[error("contraction failure in {what}: norm {norm} not below {bound}")]
    Contraction { what: &'static str, norm: f64, bound: f64 },
    #[error("materialized dimension {dim} exceeds cap {cap}")]
    CapExceeded { dim: usize, cap: usize },
    #[error("degenerate coefficient: min of 1 + a3 is {0}, must exceed 1/2")]
    DegenerateCoefficient(f64),
    #[error("zero-mean violation of the second-order coefficient at theta node {node}: mean {mean:e}")]
    ZeroMean { node: usize, mean: f64 },
    #[error("step {step} failed: {source}")]
    Step { step: &'static str, #[source] source: Box<Error> },
    #[error("nonzero average {0:e}: the (0,0) mode is not invertible")]
    NonzeroAverage(f64),
    #[error("small divisor at l = {l:?}, j = {j}: |divisor| = {value:e} below {bound:e}")]
    SmallDivisor { l: Vec<i64>, j: i64, value: f64, bound: f64 },
    #[error("precondition rejected: {0}")]
    Precondition(String),
    #[error("KAM iteration stagnated at step {0}")]
    Stagnation(usize),
    #[error("lambda excluded by the Melnikov conditions: {0}")]
    Excluded(String),
    #[error("Newton iteration diverged at iterate {0}")]
    Divergence(usize),
    #[error("instability detected at t = {t}: norm growth {growth:e}")]
    Unstable { t: f64, growth: f64 },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// A Melnikov failure, possibly reported from inside a step.
    pub fn is_exclusion(&self) -> bool {
        match self {
            Error::Excluded(_) | Error::SmallDivisor { .. } => true,
            Error::Step { source, .. } => source.is_exclusion(),
            _ => false,
        }
    }

    pub(crate) fn in_step(self, step: &'static str) -> Error {
        Error::Step { step, source: Box::new(self) }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the solver, the operators and the diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("precision of {digits} digits is below the minimum of 32")]
    InvalidPrecision { digits: u32 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("numerically singular operator: pivot {pivot} in column {column} is below machine epsilon")]
    SingularOperator { column: usize, pivot: String },

    #[error("degenerate divided difference: coordinate {coordinate} coincides at working precision")]
    DegenerateDividedDifference { coordinate: usize },

    #[error("no convergence after {iterations} iterations")]
    MaxIterationsExceeded { iterations: usize },

    #[error("trace too short for an order estimate: {ratios} ratios available, 2 required")]
    InsufficientTrace { ratios: usize },

    #[error("ratio E_{index} = {value} is not in (0, 1)")]
    NonContractingTrace { index: usize, value: String },

    #[error("no reference root available")]
    MissingReferenceRoot,

    #[error("boundary curve evaluated at its pole (m = {m})")]
    PoleAtAsymptote { m: String },

    #[error("cannot parse `{input}` as a decimal number")]
    Parse { input: String },

    #[error("unknown {what}: `{value}`")]
    Unknown { what: &'static str, value: String },

    #[error("operation counts of {row} differ from the cost formulas at iteration {iteration}: measured {measured}, expected {expected}")]
    CounterMismatch {
        row: String,
        iteration: usize,
        measured: String,
        expected: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

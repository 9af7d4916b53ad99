use thiserror::Error;

/// Errors raised by the algorithms and their building blocks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coordinate {index} = {value} lies outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },

    #[error("the feasible region is empty")]
    Infeasible,

    #[error("LP solver failed after {iterations} iterations: {reason}")]
    Solver { iterations: usize, reason: String },

    #[error("oracle returned a non-finite {what} at {point:?}")]
    Oracle { what: &'static str, point: Vec<f64> },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

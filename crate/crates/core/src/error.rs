use thiserror::Error;

/// Errors raised by the bound and index computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter outside the natural domain: {0}")]
    Domain(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("event has zero probability")]
    EmptyEvent,

    #[error("observable is almost surely constant")]
    ConstantObservable,

    #[error("direction is degenerate (zero score variance along it)")]
    DegenerateDirection,

    #[error("no finite root: target {target} is at or beyond the threshold {threshold}")]
    NoFiniteRoot { target: f64, threshold: f64 },

    #[error("score is unbounded above along the direction; bounded-score inequality does not apply")]
    UnboundedScore,

    #[error("transition matrix is not irreducible")]
    Reducible,

    #[error("iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

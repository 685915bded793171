use thiserror::Error;

/// Errors produced by the decomposition engine and its solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-positive pivot {pivot:e} at row {index}")]
    NonPositivePivot { index: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("decomposer is not initialized")]
    NotInitialized,

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("no period detected")]
    NoPeriod,

    #[error("snapshot error: {0}")]
    Snapshot(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

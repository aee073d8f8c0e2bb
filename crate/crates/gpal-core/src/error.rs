//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by model construction, fitting, and the learning loop.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value in {0}")]
    NonFiniteValue(&'static str),
    #[error("sample mean at point {row}, output {col} differs from replicate mean by {delta:e}")]
    MeanInconsistent { row: usize, col: usize, delta: f64 },
    #[error("design rows {a} and {b} coincide within 1e-9; model replication via counts instead")]
    DuplicateDesignRows { a: usize, b: usize },
    #[error("covariance matrix not positive definite (jitter escalated to {jitter:e})")]
    NotPositiveDefinite { jitter: f64 },
    #[error("design matrix is rank deficient; need k >= q independent rows")]
    RankDeficientDesign,
    #[error("unknown parameter index {0}")]
    UnknownParameter(usize),
    #[error("optimization failed: {0}")]
    OptimizationFailed(&'static str),
    #[error("candidate pool is empty")]
    EmptyPool,
    #[error("Fisher information matrix is singular after regularization")]
    SingularInformation,
    #[error("point outside configured bounds at coordinate {0}")]
    OutOfBounds(usize),
    #[error("all {attempted} cross-validation folds failed to fit")]
    FoldFitFailed { attempted: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

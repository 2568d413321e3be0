//! Error types shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller supplied an argument outside the documented range.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A form of the wrong degree was passed to an exterior-calculus operator.
    #[error("invalid degree: {op} expects degree {expected}, got {got}")]
    InvalidDegree {
        op: &'static str,
        expected: &'static str,
        got: u8,
    },

    /// Two values built over different structure groups or grids were mixed.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A run configuration violates a stability or consistency bound.
    #[error("configuration error: {0}")]
    Config(String),

    /// A time integrator produced a non-finite value.
    #[error("numerical divergence at step {step}: {context}")]
    Divergence { step: usize, context: String },

    /// An iterative solver failed to reach its tolerance.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Cached state disagrees with its recomputation.
    #[error("inconsistent state: {0}")]
    InconsistentState(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// A snapshot file failed its header or payload checks.
    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),
}

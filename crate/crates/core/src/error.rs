use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
///
/// Index fields are 1-based so they can be reported to users verbatim.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} of {dim})")]
    NotPositiveDefinite { pivot: usize, dim: usize },

    #[error("clique block {clique} (variables {first}..={last}) is not positive definite")]
    CliqueNotPositiveDefinite {
        clique: usize,
        first: usize,
        last: usize,
    },

    #[error("separator block {separator} (variables {first}..={last}) is not positive definite")]
    SeparatorNotPositiveDefinite {
        separator: usize,
        first: usize,
        last: usize,
    },

    #[error("regression block for row {row} is singular")]
    SingularRegression { row: usize },

    #[error("degenerate conditional scale at clique {clique}")]
    DegenerateConditional { clique: usize },

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

use thiserror::Error;

/// Errors raised while building or parsing an [`SdpProblem`](crate::SdpProblem).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdpError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("problem dimension must be positive")]
    EmptyProblem,

    #[error("non-finite value in problem data")]
    NonFinite,

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

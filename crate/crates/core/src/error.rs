use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamError {
    #[error("array must have at least {min} elements, got {got}")]
    TooFewElements { min: usize, got: usize },

    #[error("angle {0} rad is outside the visible region")]
    AngleOutOfRange(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("weight vector is zero")]
    ZeroVector,

    #[error("empty angle grid")]
    EmptyGrid,

    #[error("invalid range: [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("subbeam weights must have unit norm (got {0})")]
    NotUnitNorm(f64),

    #[error("power split must lie strictly inside (0, 1), got {0}")]
    InvalidSplit(f64),

    #[error("matrix is zero")]
    ZeroMatrix,

    #[error("relaxed problem is infeasible at iteration {iteration}")]
    Infeasible { iteration: usize },

    #[error("SDP solver failed at iteration {iteration}: {detail}")]
    NumericalFailure { iteration: usize, detail: String },

    #[error(transparent)]
    Sdp(#[from] sdp_ipm::SdpError),
}

impl BeamError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        BeamError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

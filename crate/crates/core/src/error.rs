use thiserror::Error;

/// Failures raised by the estimation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum JiveError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is rank deficient (smallest singular value {smallest:.3e})")]
    RankDeficient { smallest: f64 },

    /// The r-th and (r+1)-th eigenvalues of the aggregated projector tie,
    /// so the top-r eigenspace is not unique.
    #[error("degenerate aggregation: eigengap {gap:.3e} at rank {rank}")]
    DegenerateAggregation { gap: f64, rank: usize },

    #[error("misalignment theta(w) = {theta:.3e} is below the floor {floor:.1e}")]
    ThetaTooSmall { theta: f64, floor: f64 },

    #[error("weight vector touches the simplex boundary (min weight {min_weight:.3e}, step {step:.3e})")]
    BoundaryPoint { min_weight: f64, step: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

pub type Result<T, E = JiveError> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(JiveError::InvalidInput(msg.into()))
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A moment matrix that must be positive definite is not.
    #[error("{what} is not positive definite (smallest pivot {pivot:e})")]
    SingularMoment { what: String, pivot: f64 },

    #[error("{what} is rank deficient (relative singular value {ratio:e})")]
    RankDeficient { what: String, ratio: f64 },

    #[error("sample too short: {what} needs at least {needed} observations, got {got}")]
    SampleSize { what: String, needed: usize, got: usize },

    #[error("singular regression: {0}")]
    SingularRegression(String),

    #[error("invalid rank {rank} for dimension {dim}: {reason}")]
    InvalidRank { rank: usize, dim: usize, reason: String },

    #[error("eigenvalue {value} outside [0, 1)")]
    InvalidEigenvalue { value: f64 },

    #[error("no permanent-transitory decomposition exists: {0}")]
    NoDecomposition(String),

    #[error("degenerate geometry: {what} has condition number {condition:e}")]
    DegenerateGeometry { what: String, condition: f64 },

    #[error("invalid restriction: {0}")]
    InvalidRestriction(String),

    #[error("numerical inconsistency: {0}")]
    NumericalInconsistency(String),
}

impl Error {
    /// True for failures caused by the data or arguments rather than by
    /// ill-conditioned numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::SampleSize { .. }
                | Error::InvalidRank { .. }
                | Error::InvalidRestriction(_)
                | Error::NoDecomposition(_)
        )
    }
}

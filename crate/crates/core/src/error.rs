use thiserror::Error;

/// Failures raised by model operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no rollup participates in the blob market")]
    EmptyParticipation,

    #[error("rates must be sorted in decreasing order (entry {index} exceeds its predecessor)")]
    Unsorted { index: usize },

    #[error("unknown rollup id `{0}`")]
    UnknownRollup(String),

    #[error("duplicate rollup id `{0}`")]
    DuplicateRollup(String),

    #[error("a merge needs two distinct rollups, got `{0}` twice")]
    SelfMerge(String),

    #[error("operation requires a maximum blob size")]
    MissingCap,

    /// With every blob at the size cap the participants still post more
    /// than `target` blobs per time unit, so no finite price clears.
    #[error(
        "blob target {target} is unreachable: capped blob rate is at least {capped_rate} at any price"
    )]
    InfeasibleTarget { target: f64, capped_rate: f64 },

    #[error("posting interval is zero: continuous posting cannot be simulated")]
    ZeroInterval,

    #[error("search grid is empty")]
    EmptyGrid,

    #[error("{what} failed to converge (residual {residual:e})")]
    NumericFailure { what: &'static str, residual: f64 },
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidParameter { name, reason: reason.into() }
}

use blob_econ::ModelError;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INTERNAL: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const NO_DEAL: i32 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("invalid scenario: {0}")]
    Validation(String),

    #[error(transparent)]
    Model(#[from] ModelError),

    /// Economic outcome rather than an input fault: no deal, infeasible
    /// target, unprofitable merge.
    #[error("{0}")]
    NoDeal(String),

    #[error("non-finite value for {0}")]
    NonFinite(String),

    #[error("cannot write {path}: {message}")]
    Write { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation(_) => exit::VALIDATION,
            CliError::NoDeal(_) => exit::NO_DEAL,
            CliError::Read { .. } | CliError::NonFinite(_) | CliError::Write { .. } => exit::INTERNAL,
            CliError::Model(e) => match e {
                ModelError::InfeasibleTarget { .. } | ModelError::EmptyParticipation => exit::NO_DEAL,
                ModelError::NumericFailure { .. } => exit::INTERNAL,
                _ => exit::VALIDATION,
            },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid cutoff: {0}")]
    InvalidCutoff(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("out of domain: {0}")]
    OutOfDomain(String),

    /// The truncated Fock space cannot represent the requested object.
    #[error("truncation guard refused: {0}")]
    TruncationRefused(String),

    #[error("incomplete data: {0}")]
    IncompleteData(String),

    /// Finite-difference diagnostics indicate the result is dominated by roundoff.
    #[error("numerical diagnostic: {0}")]
    Diagnostic(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An exhaustive or matrix computation was asked for an instance larger
    /// than its guard allows.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("no root in bracket: {0}")]
    NoRoot(String),

    #[error("witness infeasible for label {label}: min eigenvalue {min_eigenvalue:e}")]
    CertificationFailure { label: usize, min_eigenvalue: f64 },
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

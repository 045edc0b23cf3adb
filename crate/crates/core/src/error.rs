use thiserror::Error;

/// Error kinds shared by every module of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("insufficient precision: {0}")]
    Precision(String),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("unsupported scene: {0}")]
    Scope(String),
    #[error("scene validation failed: {0}")]
    Scene(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors surfaced by the construction and verification routines.
#[derive(Error, Debug)]
pub enum Error {
    /// Parameters violate a structural constraint (cutoff inequality,
    /// dimension bounds, mismatched oracle caches, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument is outside the domain of the operation.
    #[error("argument error: {0}")]
    Argument(String),

    /// A numerical procedure failed to reach its accuracy target.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors surfaced by the solver engine.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: bad dimensions, unknown problem names, malformed plans.
    #[error("configuration error: {0}")]
    Config(String),

    /// A point was used outside the region where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Numerical failure during training or evaluation (non-finite values, undefined metrics).
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller broke an operation's precondition.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Non-finite values or mass drift during a simulation.
    #[error("simulation diverged: {0}")]
    Divergence(String),

    #[error("archive error: {0}")]
    Archive(String),

    #[error("encoder error: {0}")]
    Encoder(String),

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Divergence(_))
    }
}

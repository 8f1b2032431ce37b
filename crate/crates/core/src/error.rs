use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad experiment or primitive configuration (unsupported width, unknown
    /// registry name, violated parameter bound).
    #[error("configuration error: {0}")]
    Config(String),
    /// Inputs that do not fit together (width mismatch, bad permutation).
    #[error("input error: {0}")]
    Input(String),
    /// A construction's precondition on its numeric parameters failed.
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("malformed data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}

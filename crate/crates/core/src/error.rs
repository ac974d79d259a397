use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("function undefined at eigenvalue {eigenvalue:e}")]
    Domain { eigenvalue: f64 },

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("not a valid state: {0}")]
    InvalidState(String),

    #[error("map is not trace preserving (marginal deviation {deviation:e})")]
    NotTracePreserving { deviation: f64 },

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("solver did not reach optimality: {0}")]
    Solver(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("malformed input at `{path}`: {message}")]
    Input { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    /// The team is not collectively observable, so no graph can make it one-hop observable.
    #[error("infeasible: team is not collectively observable")]
    Infeasible,

    #[error("no connected candidate within {budget} edge flip(s) of the base graph")]
    InfeasibleStep { budget: usize },

    #[error("reconfiguration did not reach one-hop observability within {cap} outer iterations")]
    IterationCapExceeded { cap: usize },

    #[error("{field}: {message}")]
    Validation { field: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

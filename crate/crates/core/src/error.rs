use thiserror::Error;

/// Errors produced by the library.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter or argument violates its contract.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A numerical routine failed to converge or lost control of its error.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

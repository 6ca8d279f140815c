use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// An argument is outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The assembled relative class number was not a positive integer.
    #[error("h-({modulus}) assembly is not a positive integer: {value}")]
    NotInteger { modulus: u64, value: String },

    #[error("time limit of {seconds}s exceeded while {during}")]
    TimeLimit { seconds: u64, during: String },

    /// Degenerate input to the class-number bound.
    #[error("bound formula degenerate: {0}")]
    DegenerateBound(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

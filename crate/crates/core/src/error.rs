use thiserror::Error;

/// Errors raised by the estimation engine.
#[derive(Debug, Error)]
pub enum Error {
    /// Array shapes that do not agree with each other.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An argument outside the domain of the operation (e.g. a nonpositive scale).
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller-side precondition was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A numerical routine failed (singular matrix, vanishing ordinate, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

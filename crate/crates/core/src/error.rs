use thiserror::Error;

/// Errors raised by the algebra, program builder and SDP layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    /// An operation would make decision variables appear non-affinely.
    #[error("nonlinear in decision variables: {0}")]
    NonLinear(String),
    #[error("registration error: {0}")]
    Registration(String),
    #[error("invalid variable option: {0}")]
    Option(String),
    #[error("problem exceeds solver capacity: {0}")]
    Capacity(String),
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("size mismatch: expected {expected} vertices, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("edge {{{0}, {1}}} is not in the tour")]
    EdgeNotInTour(usize, usize),

    #[error("removed edges share a vertex")]
    SharedVertex,

    #[error("script violation at step {step}: {reason}")]
    ScriptViolation { step: usize, reason: String },

    #[error("{what}: n = {n} exceeds the supported maximum of {max}")]
    Capacity { what: &'static str, n: usize, max: usize },

    #[error("out of domain: {0}")]
    OutOfDomain(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}

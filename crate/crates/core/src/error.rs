//! Error type shared by every module of the crate.

use std::fmt;

/// Errors produced by construction, evaluation, and I/O.
#[derive(Debug)]
pub enum Error {
    /// An argument is out of range or otherwise unusable.
    InvalidParameter(String),
    /// Two values that must live on the same group / have matching shapes do not.
    IncompatibleOperands(String),
    /// A composite object (network, layer, file payload) violates a structural rule.
    InvalidStructure(String),
    /// A caller precondition was not met (e.g. a non-symmetrized sample set).
    Precondition(String),
    /// A document could not be parsed; includes the parser's location report.
    Parse(String),
    /// A parsed document violates a named invariant.
    Validation(String),
    /// Underlying filesystem failure.
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::IncompatibleOperands(msg) => write!(f, "incompatible operands: {msg}"),
            Error::InvalidStructure(msg) => write!(f, "invalid structure: {msg}"),
            Error::Precondition(msg) => write!(f, "precondition not met: {msg}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
            Error::Validation(msg) => write!(f, "validation error: {msg}"),
            Error::Io(err) => write!(f, "io error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}

pub type Result<T> = std::result::Result<T, Error>;

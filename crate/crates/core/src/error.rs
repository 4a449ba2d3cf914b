use alloc::string::String;
use core::fmt;

/// Errors raised by the pure pipeline stages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A label spelling that is not part of the requested scheme.
    UnknownLabel(String),
    /// A sample failed structural validation.
    InvalidSample { id: String, reason: &'static str },
    /// A run setting is out of range or inconsistent.
    InvalidConfig(String),
    /// The prompt catalog is missing a template or a template is malformed.
    Catalog(String),
    /// A prompt could not be built for the given inputs.
    Prompt(&'static str),
    /// A block was requested for a source result that carries no evidence.
    RenderFailedResult,
    /// A metric was requested over an empty population.
    EmptyInput(&'static str),
    /// Counts passed to a metric are inconsistent.
    InvalidCounts(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnknownLabel(s) => write!(f, "unknown label `{s}`"),
            Error::InvalidSample { id, reason } => write!(f, "invalid sample `{id}`: {reason}"),
            Error::InvalidConfig(msg) => write!(f, "invalid run configuration: {msg}"),
            Error::Catalog(msg) => write!(f, "prompt catalog: {msg}"),
            Error::Prompt(msg) => write!(f, "cannot build prompt: {msg}"),
            Error::RenderFailedResult => f.write_str("cannot render a failed source result"),
            Error::EmptyInput(what) => write!(f, "empty input: {what}"),
            Error::InvalidCounts(what) => write!(f, "invalid counts: {what}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T, E = Error> = core::result::Result<T, E>;

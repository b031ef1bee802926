use thiserror::Error;

/// Errors surfaced by the estimator, simulator, planner and harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),
    /// The planner could not produce any feasible candidate.
    #[error("planning error: {0}")]
    Planning(String),
    /// Bookkeeping structures disagree with each other.
    #[error("consistency error: {0}")]
    Consistency(String),
    /// A text artifact (config, world, checkpoint) could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    /// An operation was refused because the instance is too large to enumerate.
    #[error("refused: {0}")]
    Refused(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

/// Errors raised by the scheduling toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Malformed input file; the message names the offending field.
    #[error("parse error: {0}")]
    Parse(String),

    /// Well-formed input that violates a domain invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A size guard was exceeded.
    #[error("capacity exceeded: {what} ({actual} > {limit}); {advice}")]
    Capacity {
        what: &'static str,
        actual: usize,
        limit: usize,
        advice: &'static str,
    },

    /// A caller broke the precondition of an algorithm.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numerical degeneracy: {0}")]
    Degeneracy(String),

    /// Ground-truth model cannot price a configuration.
    #[error("model coverage: no speed for job {job} in configuration {config:?}")]
    Coverage { job: usize, config: Vec<usize> },

    #[error("co-run oracle failed on jobs {jobs:?}: {message}")]
    Oracle { jobs: Vec<usize>, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

/// Errors raised by operators, priors, decoders and experiment plumbing.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    Dimension {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("projection undefined: {0}")]
    Projection(String),

    #[error("corruption budget infeasible: {flips} flips requested for {m} measurements")]
    Budget { flips: usize, m: usize },

    #[error("sampling failed after {attempts} attempts: {reason}")]
    Sampling { attempts: usize, reason: String },

    #[error("all {restarts} restarts failed; last error: {last}")]
    AllRestartsFailed { restarts: usize, last: Box<Error> },

    #[error("not applicable: {0}")]
    NotApplicable(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, actual: usize, context: &'static str) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected,
            actual,
            context,
        })
    }
}

use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CimError>;

#[derive(Debug, Error)]
pub enum CimError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{model} integration failed at step {step} (t = {t}): pulse {pulse} is {what}")]
    Integration {
        model: &'static str,
        step: usize,
        t: f64,
        pulse: usize,
        what: &'static str,
    },

    #[error("column {0} of the observation matrix has zero norm but lies on the support")]
    ZeroColumn(usize),

    #[error("problem too large for exhaustive search: N = {0} (limit 24)")]
    TooLarge(usize),

    #[error("alternating minimisation failed at iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<CimError>,
    },

    #[error("bad file format: {0}")]
    Format(String),

    #[error("{failed} run(s) failed; first: {first}")]
    RunsFailed { failed: usize, first: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CimError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        CimError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
        if expected == actual {
            Ok(())
        } else {
            Err(CimError::DimensionMismatch {
                context,
                expected,
                actual,
            })
        }
    }
}

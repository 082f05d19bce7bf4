//! Error type shared by every module of the crate.

use thiserror::Error;

use crate::coefficients::ModelKind;
use crate::schemes::SchemeId;

pub type Result<T> = std::result::Result<T, SdeError>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SdeError {
    #[error("step size {0} outside (0, 1]")]
    StepOutOfDomain(f64),

    #[error("truncation radius {radius} below the required bound {bound}")]
    RadiusBelowBound { radius: f64, bound: f64 },

    #[error("degenerate truncation interval: radius {0} < 1")]
    DegenerateRadius(f64),

    #[error("non-finite value from {what} at x = {x}")]
    NonFinite { what: &'static str, x: f64 },

    #[error("scheme {scheme} is not supported for model {model:?}")]
    Unsupported { model: ModelKind, scheme: SchemeId },

    #[error("model precondition violated: {0}")]
    Precondition(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("root solver failed at rhs = {rhs}: {reason}")]
    Solver { rhs: f64, reason: String },

    #[error("sequence of length {len} is not divisible by factor {factor}")]
    NotDivisible { len: usize, factor: usize },

    #[error("expected {expected} increments, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("I/O failure: {0}")]
    Io(String),
}

impl SdeError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        SdeError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for SdeError {
    fn from(e: std::io::Error) -> Self {
        SdeError::Io(e.to_string())
    }
}

impl From<csv::Error> for SdeError {
    fn from(e: csv::Error) -> Self {
        SdeError::Io(e.to_string())
    }
}

use thiserror::Error;

/// Errors raised by the numerical operations of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index {index} exceeds materialized horizon {horizon}")]
    HorizonExceeded { index: usize, horizon: usize },

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("radii must satisfy 0 < s < t (got s = {inner}, t = {outer})")]
    InvalidRadii { inner: f64, outer: f64 },

    #[error("schedule term rho_{index} = exp({log_term}) is not below 1/2")]
    RhoTooLarge { index: usize, log_term: f64 },

    #[error("truncation mismatch: {left} vs {right}")]
    TruncationMismatch { left: usize, right: usize },

    #[error("cannot divide by z^{power}: series valuation is {valuation}")]
    Division { power: usize, valuation: usize },

    #[error("derivation generator has valuation {valuation}; at least 2 is needed for a terminating exponential")]
    NonTerminatingGenerator { valuation: usize },

    #[error("harmonic cap mismatch: {left} vs {right}")]
    CapMismatch { left: usize, right: usize },

    #[error("mean harmonic {mean} cannot be removed by the homological equation")]
    Obstruction { mean: f64 },

    #[error("harmonic {harmonic} lies below the tail support 2^{n}")]
    SupportViolation { harmonic: i64, n: u32 },

    #[error("singular linearization at step {step}: constant term vanished")]
    SingularDiagonal { step: usize },

    #[error("bound check found no index within horizon {horizon}")]
    NoIndex { horizon: usize },

    #[error("pair is not tame within horizon {horizon}")]
    NotTame { horizon: usize },

    #[error("step map failed at step {step}: {message}")]
    StepMap { step: usize, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

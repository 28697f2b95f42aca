use thiserror::Error;

use crate::RegimeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The integrated field produced NaN or infinity, usually an unstable
    /// step size or a genuine blow-up of the dynamics.
    #[error("non-finite field value at t = {time}")]
    NonFiniteField { time: f64 },

    #[error("Hermitian eigensolver failed to converge")]
    EigenFailure,

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("regime {0} appears more than once")]
    DuplicateRegime(RegimeId),

    #[error("regime {0} is not present")]
    UnknownRegime(RegimeId),

    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("sensors at x = {first} and x = {second} map to the same grid node")]
    DuplicateSensor { first: f64, second: f64 },

    #[error("sensor position {position} outside domain [{x_min}, {x_max})")]
    OutOfDomain { position: f64, x_min: f64, x_max: f64 },

    #[error("every coefficient is zero; the measurement carries no regime information")]
    AllZero,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

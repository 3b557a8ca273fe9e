use thiserror::Error;

use crate::inversion::NewtonTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range [{lo}, {hi}]")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },

    #[error("x = {x} outside covered range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },

    #[error("prime list: cannot parse {0:?} as a positive integer")]
    Parse(String),

    #[error("prime list: {0} is composite")]
    Composite(u64),

    #[error("prime list: sequence not increasing at {0}")]
    NonMonotone(u64),

    #[error("prime list: prime {0} is missing")]
    Missing(u64),

    #[error("Newton inversion of x = {x} did not converge ({} iterations in last attempt)", trace.steps.len())]
    NoConvergence { x: f64, trace: Box<NewtonTrace<f64>> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

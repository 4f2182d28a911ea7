use thiserror::Error;

/// Sign of a divergent integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceSign {
    Positive,
    Negative,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An integral over an infinite or singular range does not converge.
    #[error("divergent integral: {what} (exponent {exponent})")]
    Divergent {
        what: String,
        exponent: f64,
        sign: DivergenceSign,
    },
    #[error("domain error: {0}")]
    Domain(String),
    /// Two quadrature routes of the same kernel constant disagree.
    #[error("inconsistent kernel: moment integrals {first} and {second} differ")]
    InconsistentKernel { first: f64, second: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

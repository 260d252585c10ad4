use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("kernel density is singular at y = 0")]
    Singularity,

    #[error("kernel has no pointwise density (purely atomic spectral measure)")]
    UnsupportedDensity,

    #[error("numerical failure in {what}: achieved error estimate {achieved:e}")]
    NumericalFailure { what: String, achieved: f64 },

    #[error("tail not integrable: growth exponent {tau} must be below 2s = {two_s}")]
    NonIntegrableTail { tau: f64, two_s: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("fit window too small: {points} points (need at least 6)")]
    WindowTooSmall { points: usize },

    #[error("{0}")]
    Usage(String),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn check_order(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("order s = {s} must lie in (0, 1)")))
    }
}

pub(crate) fn check_dim(n: usize) -> Result<()> {
    if (1..=3).contains(&n) {
        Ok(())
    } else {
        Err(Error::Domain(format!("dimension n = {n} must be 1, 2 or 3")))
    }
}

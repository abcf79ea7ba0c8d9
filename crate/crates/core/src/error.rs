use thiserror::Error;

/// Errors raised by the numerical kernels and file readers.
#[derive(Debug, Error)]
pub enum Error {
    /// Inputs outside the physical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Caller violated an operation's contract (empty grids, mismatched traces, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// A numerical procedure failed to produce a usable answer.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The adaptive integrator could not take a step larger than the floor.
    #[error("step size underflow at t = {t} µs (last state a = {last_a}, b = {last_b})")]
    StepUnderflow { t: f64, last_a: num_complex::Complex64, last_b: num_complex::Complex64 },

    /// Malformed data file.
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

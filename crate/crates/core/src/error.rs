//! Crate-wide error type.

/// Errors produced by tableau construction, stage solves, and the run drivers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Inconsistent array or matrix dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A caller-supplied argument is out of range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A structural invariant of a scheme or tableau is violated.
    #[error("structural error: {0}")]
    Structure(String),

    /// A linear solve hit a (numerically) singular matrix.
    #[error("singular matrix while {0}")]
    Singular(String),

    /// Newton iteration exhausted its budget.
    #[error(
        "stage solve did not converge after {iterations} iterations (last residual {residual:.3e})"
    )]
    NonConvergence { iterations: usize, residual: f64 },

    /// Evaluation requested at a pole or otherwise outside the domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed configuration input.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

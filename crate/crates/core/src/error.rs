use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A numeric parameter is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Input data failed validation; `path` locates the offending field.
    #[error("validation error at `{path}`: {reason}")]
    Validation { path: String, reason: String },

    /// An interval `[a, b]` with `b <= a` or of unusably small length.
    #[error("degenerate interval [{a}, {b}]")]
    DegenerateInterval { a: f64, b: f64 },

    /// A point lies where the requested operation is undefined.
    #[error("point ({x1}, {x2}) is outside the admissible region: {reason}")]
    Domain { x1: f64, x2: f64, reason: String },

    /// The exponent is at or beyond the critical value.
    #[error("exponent mu = {mu} is not below the critical exponent {mu_critical}")]
    Supercritical { mu: f64, mu_critical: f64 },

    /// A precondition of an algorithm does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An iterative method failed to reach its tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// A numerical procedure could not produce a result.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for failures of numerical procedures, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence { .. } | Error::Numerical(_))
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

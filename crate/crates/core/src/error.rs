//! Error type shared by every module.

use thiserror::Error;

/// Errors raised by model construction, solvers and simulators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input violates a documented precondition.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A matrix that should be row-stochastic is not.
    #[error("row {row} of the transition matrix sums to {sum}")]
    NotStochastic { row: usize, sum: f64 },

    /// A linear system could not be solved (singular or reducible chain).
    #[error("singular system: {0}")]
    Singular(String),

    /// An iterative solver did not reach its tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// The ODE integrator could not keep its error below tolerance.
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
}

impl Error {
    /// True for errors caused by the caller's inputs rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Invalid(_))
    }
}

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}

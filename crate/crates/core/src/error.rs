//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input value violated its domain (non-finite entry, bad range).
    #[error("input domain error: {0}")]
    InputDomain(String),

    /// A caller broke a shape or state contract.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Gram matrix lost rank; `dim` is the first failing pivot index.
    #[error("singular matrix: non-positive pivot at dimension {dim}")]
    SingularMatrix { dim: usize },

    /// Problem size exceeds an enumerability guard.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// An iterative numerical routine failed to converge.
    #[error("numerical failure: {what} (residual {residual:e})")]
    Numerical { what: String, residual: f64 },

    /// Invalid configuration value.
    #[error("config error: {0}")]
    Config(String),

    /// Training diverged; carries the iteration of the last finite loss.
    #[error("training diverged at iteration {iteration}; last good iteration {last_good}")]
    Diverged { iteration: usize, last_good: usize },
}

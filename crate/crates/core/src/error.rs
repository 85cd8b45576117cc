//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A denominator that positivity assumptions require to be bounded away
    /// from zero fell below the reporting threshold.
    #[error(
        "positivity violation: {quantity} = {value:.6e} is below the threshold {threshold:.1e}"
    )]
    PositivityViolation {
        quantity: &'static str,
        value: f64,
        threshold: f64,
    },

    /// A covariate value outside the supported domain.
    #[error("domain error: x = {x} is outside [0, 1]")]
    DomainError { x: f64 },

    /// An oracle conditioning event with (near-)zero probability mass.
    #[error("degenerate conditioning: event {event} has probability {mass:.3e} < 1e-12")]
    DegenerateConditioning { event: &'static str, mass: f64 },

    /// An iterative solver did not converge within its iteration budget.
    #[error("{context}: no convergence after {iterations} iterations (last step {last_step:.3e})")]
    ConvergenceFailure {
        context: &'static str,
        iterations: usize,
        last_step: f64,
    },

    /// A model fit was requested on an empty record subset.
    #[error("empty subset: no records matched the {context} selection")]
    EmptySubset { context: &'static str },

    /// Invalid cross-fitting fold configuration.
    #[error("bad fold count: k = {k} requires 2 <= k and n >= 2k, got n = {n}")]
    BadFoldCount { n: usize, k: usize },

    /// The weighted Gram matrix of the projection design is singular.
    #[error("singular design: weighted Gram matrix is not invertible")]
    SingularDesign,

    /// The bread matrix of the sandwich covariance is singular.
    #[error("singular bread: derivative matrix is not invertible")]
    SingularBread,

    /// A degenerate data-generating specification.
    #[error("invalid DGP specification: {reason}")]
    InvalidSpec { reason: String },

    /// Too many replicates of a simulation failed.
    #[error("{failed} of {total} replicates failed (limit {limit}); first error: {first}")]
    TooManyFailures {
        failed: usize,
        total: usize,
        limit: usize,
        first: String,
    },
}

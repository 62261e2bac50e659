use thiserror::Error;

/// Errors raised by the capacity solvers, the quantization analysis and the
/// protocol simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The call itself is malformed (mismatched dimensions, overlapping axis sets, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// The constraint set of an optimization problem is empty.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The rate budget exceeds the conditional entropy, so the rate
    /// constraint no longer binds and the unconstrained formula applies.
    #[error("rate {r1} saturates the constraint (threshold {threshold})")]
    Saturated { r1: f64, threshold: f64 },

    /// A truncated numerical sum did not capture enough probability mass.
    #[error("truncation error: {0}")]
    Truncation(String),

    /// A parameter combination that would exceed the simulator's resource limits.
    #[error("resource limit: {0}")]
    Resource(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

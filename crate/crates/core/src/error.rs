use alloc::string::String;

/// Errors raised by the forward solver, belief arithmetic, and the inverse sampler.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BrcError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The model assigns zero probability to an observation that was seen.
    #[error("impossible evidence: observation {observation} has zero probability after action {action}")]
    ImpossibleEvidence { action: usize, observation: usize },

    #[error("belief lies outside the probability simplex: {0}")]
    OutsideSimplex(String),

    #[error("value iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
}

pub type Result<T> = core::result::Result<T, BrcError>;

//! Error type shared across the crate.

/// Errors raised by solvers, moment computations, and table accessors.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A conditional moment was requested over a region carrying no mass.
    #[error("region carries zero probability mass")]
    ZeroProbabilityRegion,

    /// The conditional law over the region is a point mass, so the
    /// power-normalizing gain is undefined.
    #[error("conditional distribution over the region is degenerate (zero variance)")]
    DegenerateRegion,

    /// A mass-preserving rightward shift was requested but not enough mass
    /// remains to the right of the new left endpoint.
    #[error("not enough probability mass right of beta1'={beta1_new} to absorb the interval")]
    InfeasibleShift { beta1_new: f64 },

    /// The sample handed to the encoder disagrees with the side-channel sign.
    #[error("sample sign does not match the side-channel sign")]
    SignMismatch,

    /// Stage-cost gradients are only defined for interior policies
    /// (`0 < beta1 < beta2 < inf`).
    #[error("gradient undefined on the policy boundary; need 0 < beta1 < beta2 < inf")]
    UnsupportedBoundary,

    /// A root was requested outside the range of the monotone band-width map.
    #[error("target {target} out of range; the band-width map only exceeds {infimum}")]
    TargetOutOfRange { target: f64, infimum: f64 },

    /// The numeric threshold search and the verification grid disagree.
    #[error("threshold search failed to converge: {0}")]
    NonConvergence(String),

    /// Scheduling regions handed to the cost functional overlap or leave a
    /// gap of positive measure.
    #[error("regions do not partition the support: {0}")]
    Partition(String),

    /// Counterexample parameters do not admit the rearranged policy.
    #[error("counterexample parameters infeasible: {0}")]
    InfeasibleCounterexample(String),

    /// Table accessor called outside the solved index ranges.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// A constructor argument failed validation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

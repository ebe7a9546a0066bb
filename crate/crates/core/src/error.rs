use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("series did not converge after {terms} terms (last term {last:e})")]
    NonConvergent { terms: usize, last: f64 },

    /// The offending products / constraints, by name.
    #[error("inadmissible parameters: {}", .0.join(", "))]
    Inadmissible(Vec<String>),

    #[error("singular: {0}")]
    Singular(String),

    #[error("empty time domain ({0}, {1})")]
    EmptyDomain(f64, f64),

    #[error("point {0} is not in the support of the conditioning law")]
    UnsupportedPoint(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A constructor or process hypothesis failed; names the inequality.
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("need at least {needed} paths, got {got}")]
    InsufficientPaths { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

use thiserror::Error;

/// Errors raised by the estimators, samplers and simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("a meta-analysis needs at least 2 studies, got {m}")]
    EmptyOrSingleton { m: usize },

    #[error("study `{study}`: standard error must be positive, got {se}")]
    NonPositiveSe { study: String, se: f64 },

    #[error("study `{study}`: degrees of freedom must be positive, got {df}")]
    NonPositiveDf { study: String, df: f64 },

    #[error("study `{study}`: effect size must be finite, got {y}")]
    NonFiniteEffect { study: String, y: f64 },

    #[error("duplicate study id `{study}`")]
    DuplicateId { study: String },

    #[error("degenerate weights: DerSimonian-Laird denominator is zero")]
    DegenerateWeights,

    #[error("{what} did not converge after {iterations} iterations (last iterate: {last})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        last: String,
    },

    #[error("{what}: statistic never crossed {threshold} within the search range on the {side} side")]
    BracketFailure {
        what: &'static str,
        side: &'static str,
        threshold: f64,
    },

    #[error("singular matrix in {0}")]
    SingularMatrix(&'static str),

    #[error("signed root {r} too close to the maximum likelihood estimate")]
    NearMleSingularity { r: f64 },

    #[error("observed information is not positive definite")]
    HessianNotPd,

    #[error("study has zero within-study variance")]
    ZeroVariance,

    #[error("simulation failed: {0}")]
    Generation(String),

    #[error("no converged replication for method {0}")]
    AllFailed(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

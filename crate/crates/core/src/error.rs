use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("load {value} on link {link} is outside the cost domain [0, {cap}]")]
    Domain { link: usize, value: f64, cap: f64 },

    #[error("invalid cost function on link {link}: {reason}")]
    InvalidCost { link: usize, reason: String },

    #[error("invalid utility: {0}")]
    InvalidUtility(String),

    #[error("infeasible strategy set: {0}")]
    InfeasibleSet(String),

    #[error("polytope is empty")]
    EmptyPolytope,

    #[error("polytope is unbounded")]
    UnboundedPolytope,

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("player index {index} out of range for {count} players")]
    PlayerIndex { index: usize, count: usize },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
        last: Vec<f64>,
    },

    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("metric check failed for {metric}: {detail}")]
    MetricCheck { metric: &'static str, detail: String },
}

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DependabilityError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),

    #[error("hazard is singular at t = 0 for shape {shape} < 1")]
    Singularity { shape: f64 },

    #[error("no reliability given for component `{0}`")]
    MissingComponent(String),

    #[error("probability {value} for `{id}` is outside [0, 1]")]
    ProbabilityOutOfRange { id: String, value: f64 },

    #[error("malformed structure: {0}")]
    MalformedStructure(String),

    #[error("malformed fault tree: {0}")]
    MalformedTree(String),

    #[error("{count} shared components exceed the conditioning limit of {limit}")]
    TooManyShared { count: usize, limit: usize },

    #[error("cannot expand k-of-n node: {0}")]
    Unexpandable(String),

    #[error("malformed markov model: {0}")]
    MalformedMarkov(String),

    #[error("markov chain is reducible: state `{0}` is not mutually reachable from the first state")]
    Reducible(String),

    #[error("steady-state solve did not converge (residual {0:e})")]
    NonConvergence(f64),

    #[error("malformed path set: {0}")]
    MalformedPaths(String),
}

use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid MDP: {0}")]
    InvalidMdp(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid features: {0}")]
    InvalidFeatures(String),

    #[error("invalid value for `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("policy-induced chain is not ergodic: {0}")]
    NonErgodicChain(String),

    #[error("linear system is numerically singular")]
    SingularSystem,

    #[error("feature columns are linearly dependent (minimum covariance eigenvalue {omega:e})")]
    RankDeficientFeatures { omega: f64 },

    #[error("second-moment entry {index} is zero at division time")]
    ZeroSecondMoment { index: usize },

    #[error("{}", degenerate_message(*exact_convergence))]
    DegenerateSeries { exact_convergence: bool },

    #[error("rate fit needs at least {needed} checkpoints, got {got}")]
    TooFewCheckpoints { needed: usize, got: usize },
}

fn degenerate_message(exact: bool) -> &'static str {
    if exact {
        "series reached zero error (exact convergence); log-log fit undefined"
    } else {
        "series contains a negative or non-finite error value"
    }
}

pub type Result<T> = core::result::Result<T, Error>;

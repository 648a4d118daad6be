use std::path::PathBuf;

/// Errors produced by the accountant, the simulator and the attack harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("input {value} lies outside the admissible interval [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("distributions are defined over different lattices")]
    LatticeMismatch,

    #[error("cannot compose budgets at different Renyi orders ({first} vs {other})")]
    MixedOrders { first: String, other: String },

    #[error("RDP to DP conversion is undefined at order 1")]
    ConversionUndefined,

    #[error("Gaussian mechanism budget is unbounded at infinite order")]
    Unbounded,

    #[error("target {target} is unreachable for sigma in [{lo}, {hi}]")]
    Unreachable { target: String, lo: f64, hi: f64 },

    #[error("no client updates in round {round}")]
    NoUpdates { round: usize },

    #[error("model diverged (non-finite weights) in round {round}")]
    Diverged { round: usize },

    #[error("at least 2 shadow models are required, got {0}")]
    TooFewShadows(usize),

    #[error("audit set is unbalanced: {members} members vs {non_members} non-members")]
    Unbalanced { members: usize, non_members: usize },

    #[error("audit sample {id} appears in the training shard of shadow model {model}")]
    ShadowOverlap { id: u64, model: usize },

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error("config key `{key}`: {reason}")]
    ConfigValue { key: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

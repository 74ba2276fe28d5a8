use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("order set must not be empty")]
    EmptyOrderSet,

    #[error("Rényi order {0} must be finite and strictly greater than 1")]
    InvalidOrder(f64),

    #[error("orders must be strictly increasing ({prev} followed by {next})")]
    UnsortedOrders { prev: f64, next: f64 },

    #[error("delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),

    #[error("epsilon must be finite and nonnegative, got {0}")]
    InvalidEpsilon(f64),

    #[error("DP target must be finite and strictly positive, got {0}")]
    InvalidTarget(f64),

    #[error("curve has {eps} values for {orders} orders")]
    LengthMismatch { orders: usize, eps: usize },

    #[error("curves are defined over different order sets")]
    OrderSetMismatch,

    #[error("order {0} is not tracked")]
    UnknownOrder(f64),

    #[error("granularity order set needs n >= 2, got {0}")]
    InvalidGranularity(u64),

    #[error("invalid mechanism: {0}")]
    InvalidMechanism(String),

    #[error("outcome {0:?} has positive probability in one world only (divergence is infinite)")]
    SupportMismatch(String),

    #[error("raw curves carry no output distribution and cannot be sampled")]
    NotSampleable,

    #[error("filter index exceeds {0} doublings")]
    FilterIndexOverflow(u32),

    #[error("stopping time {s} is outside 1..={len}")]
    StepOutOfRange { s: usize, len: usize },

    #[error("invalid adversary script: {0}")]
    InvalidScript(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("log replay diverged at event {index}: {detail}")]
    ReplayMismatch { index: u64, detail: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

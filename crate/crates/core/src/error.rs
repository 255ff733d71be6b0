use std::path::PathBuf;

use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("distribution has {0} entries, need at least 2")]
    TooShort(usize),

    #[error("distribution has zero total mass")]
    ZeroMass,

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("negative probability {value} at index {index}")]
    Negative { index: usize, value: f64 },

    #[error("distribution does not sum to 1 (sum = {0})")]
    NotNormalized(f64),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("cross-entropy is infinite: pred[{0}] = 0 under positive target mass")]
    InfiniteResult(usize),

    #[error("mixture weights w1={w1}, w2={w2} must be non-negative and sum to 1")]
    BadWeights { w1: f64, w2: f64 },

    #[error("pool size {0} too small (need n >= 2)")]
    BadPoolSize(usize),

    #[error("surrogate probabilities missing: {0}")]
    MissingSurrogate(String),

    #[error("embeddings missing: {0}")]
    MissingEmbedding(String),

    #[error("budget {budget} exceeds pool size {pool}")]
    BudgetExceedsPool { budget: usize, pool: usize },

    #[error("invalid configuration: {0}")]
    BadConfig(String),

    #[error("empty input")]
    EmptyInput,

    #[error("invalid cluster count k={k} for {n} samples")]
    BadK { k: usize, n: usize },

    #[error("no remaining samples to acquire")]
    Exhausted,

    #[error("empty pool")]
    EmptyPool,

    #[error("empty subset")]
    EmptySubset,

    #[error("acquisition probability {value} at step {step} outside (0, 1]")]
    BadProbability { step: usize, value: f64 },

    #[error("loss for sample {0} is missing or invalid")]
    BadLoss(String),

    #[error("question has {0} options, need at least 2")]
    TooFewOptions(usize),

    #[error("reformatter failed: {0}")]
    ReformatterFailure(String),

    #[error("run {run} does not cover the budget grid")]
    GridMismatch { run: usize },

    #[error("curve has {0} points, need at least 2")]
    TooFewPoints(usize),

    #[error("conditioned subset has {errors} errors and {correct} non-errors")]
    DegenerateSubset { errors: usize, correct: usize },

    #[error("value must be positive, got {0}")]
    NonPositive(f64),

    #[error("line {line}: parse error: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: {reason}")]
    Validation { line: usize, reason: String },

    #[error("duplicate sample id {id:?} on line {line}")]
    DuplicateId { id: String, line: usize },

    #[error("bad synthetic scenario: {0}")]
    BadScenario(String),

    #[error("cache miss for key {0}")]
    CacheMiss(String),

    #[error("remote request failed after {attempts} attempts: {message}")]
    RemoteFailure { attempts: u32, message: String },

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
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

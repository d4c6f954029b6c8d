use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid layer: p = {p} must satisfy p <= n = {n}")]
    InvalidLayer { n: usize, p: usize },

    #[error("layer (n = {n}, p = {p}) is not canonical; complement to p = {} first", n - p)]
    NotCanonical { n: usize, p: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("inadmissible coefficients: {0}")]
    Inadmissible(String),

    #[error("oracle refuses n = {n} (limit {limit})")]
    OracleTooLarge { n: usize, limit: usize },

    #[error("size guard: {what} = {got} exceeds {limit}")]
    TooLarge {
        what: &'static str,
        got: usize,
        limit: usize,
    },

    #[error("embedding width n*t = {width} exceeds {limit}; epsilon must be at least {min_epsilon:.6}")]
    EmbeddingTooWide {
        width: u64,
        limit: u64,
        min_epsilon: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

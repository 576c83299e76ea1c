use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate occurrence ({corpus_id}, sentence {sentence_idx}, token {token_idx}) at line {line}")]
    DuplicateOccurrence {
        corpus_id: String,
        sentence_idx: usize,
        token_idx: usize,
        line: usize,
    },

    #[error("invalid JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in layer {layer} at row {row}, column {col}")]
    NonFinite { layer: usize, row: usize, col: usize },

    #[error("truncated layer file {path}: expected {expected} bytes, found {actual}")]
    Truncated { path: PathBuf, expected: u64, actual: u64 },

    #[error("degenerate (zero-norm) vector at row {row}")]
    DegenerateVector { row: usize },

    #[error("need at least {needed} samples, have {available}")]
    InsufficientSamples { needed: usize, available: usize },

    #[error("cannot remove {requested} components: effective rank is {rank}")]
    RankDeficient { requested: usize, rank: usize },

    #[error("matrix has no variance to decompose")]
    NoVariance,

    #[error("decomposition did not converge: {0}")]
    NoConvergence(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

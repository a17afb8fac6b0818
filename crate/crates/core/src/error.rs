use thiserror::Error;

/// Toolkit-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("alignment error for sentence '{sentence_id}': {message}")]
    Align { sentence_id: String, message: String },

    #[error("unknown layer '{0}'")]
    UnknownLayer(String),

    #[error("unknown task '{0}'")]
    UnknownTask(String),

    #[error("unknown language '{0}'")]
    UnknownLanguage(String),

    #[error("corpus too small: {0}")]
    Sizing(String),

    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),

    #[error("distribution has zero total; statistics undefined")]
    EmptyDistribution,

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("arity mismatch: {0}")]
    Arity(String),

    #[error("embedding format error at line {line}: {message}")]
    EmbeddingFormat { line: usize, message: String },

    #[error("cannot merge embedding table for language '{language}': {message}")]
    Merge { language: String, message: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index {index} out of range for dimension {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("closure is not deterministic: {0}")]
    NonDeterministic(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("accuracy undefined: corpus has no tokens")]
    EmptyCorpus,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

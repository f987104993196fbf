use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate entity {0} in frame")]
    DuplicateEntity(u32),
    #[error("slot {0} cannot hold an actor")]
    BadSlot(String),
    #[error("frame is missing an object in one of the upper slots")]
    MissingObjects,
    #[error("incomplete instance: {0}")]
    IncompleteInstance(String),
    #[error("entity pool exhausted: {0}")]
    PoolExhausted(String),
    #[error("bad repetition count: {0}")]
    BadRepetition(String),
    #[error("invalid generator config: {0}")]
    BadGenConfig(String),
    #[error("entity {0} is not in the vocabulary")]
    UnknownEntity(u32),
    #[error("missing concept annotation: {0}")]
    MissingAnnotation(String),
    #[error("inconsistent concept annotation: {0}")]
    InconsistentAnnotation(String),
    #[error("invalid model config: {0}")]
    BadConfig(String),
    #[error("feature index {index} out of vocabulary (size {vocab_size})")]
    OutOfVocab { index: u32, vocab_size: usize },
    #[error("sequence of length {len} exceeds max_len {max_len}")]
    TooLong { len: usize, max_len: usize },
    #[error("sequence has no live positions")]
    EmptySequence,
    #[error("non-finite gradient at parameter {0}")]
    NonFiniteGradient(usize),
    #[error("vocabulary mismatch: {0}")]
    VocabMismatch(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("incompatible paradigm: {0}")]
    IncompatibleParadigm(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("need at least 2 samples for a t-test, got {0}")]
    TooFewSamples(usize),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

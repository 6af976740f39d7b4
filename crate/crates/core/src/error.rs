use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("response does not match schema: {0}")]
    ShapeMismatch(String),
    #[error("choice index {index} out of range for question {question} ({options} options)")]
    IndexOutOfRange {
        question: String,
        index: usize,
        options: usize,
    },
    #[error("duplicate choice {index} in multi-choice answer to {question}")]
    DuplicateChoice { question: String, index: usize },
    #[error("non-finite value in {0}")]
    NonFiniteValue(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("matrix has no rows")]
    EmptyMatrix,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("value {0} is not a binary label")]
    NonBinary(u8),
    #[error("split leaves an empty side (train {train}, test {test})")]
    DegenerateSplit { train: usize, test: usize },
    #[error("class {0} is absent")]
    MissingClass(u8),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("invalid k = {k} for {n} training rows")]
    InvalidK { k: usize, n: usize },
    #[error("invalid fraction {0}; must lie in (0, 1]")]
    InvalidFraction(f64),
    #[error("both samples have zero variance")]
    DegenerateSamples,
    #[error("dataset has no suspected column")]
    MissingSuspectedColumn,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("missing artifact {0}")]
    MissingArtifacts(PathBuf),
    #[error("data error: {0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Broad failure class, used by the command line to pick an exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Internal,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidConfig(_)
            | Error::InvalidSchema(_)
            | Error::InvalidFraction(_)
            | Error::InvalidK { .. }
            | Error::Json(_) => ErrorClass::Config,
            Error::ShapeMismatch(_)
            | Error::IndexOutOfRange { .. }
            | Error::DuplicateChoice { .. }
            | Error::NonFiniteValue(_)
            | Error::EmptyMatrix
            | Error::DimensionMismatch { .. }
            | Error::LengthMismatch { .. }
            | Error::NonBinary(_)
            | Error::DegenerateSplit { .. }
            | Error::MissingClass(_)
            | Error::TooFewSamples { .. }
            | Error::NonFiniteInput
            | Error::MissingSuspectedColumn
            | Error::MissingArtifacts(_)
            | Error::Data(_)
            | Error::Io { .. }
            | Error::Csv(_) => ErrorClass::Data,
            Error::EmptyBatch | Error::DegenerateSamples => ErrorClass::Internal,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Internal => 4,
        }
    }
}

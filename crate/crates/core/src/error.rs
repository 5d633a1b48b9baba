use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed XES: {0}")]
    Xml(String),

    #[error("column `{0}` not found in CSV header")]
    MissingColumn(String),

    #[error("{failed} of {total} rows could not be parsed (allowed fraction {allowed}); first failure: {first}")]
    TooManyBadRows {
        failed: usize,
        total: usize,
        allowed: f64,
        first: String,
    },

    #[error("no complete cases")]
    NoCompleteCases,

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("model/feature mismatch: {0}")]
    FeatureMismatch(String),

    #[error("holdout mismatch: {0}")]
    HoldoutMismatch(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("missing upstream artifact `{}`", .0.display())]
    MissingArtifact(PathBuf),

    #[error("unsupported model document: {0}")]
    ModelFormat(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Pipeline,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) => ErrorClass::Config,
            Error::Csv(_)
            | Error::Xml(_)
            | Error::MissingColumn(_)
            | Error::TooManyBadRows { .. }
            | Error::NoCompleteCases
            | Error::InsufficientHistory(_) => ErrorClass::Data,
            Error::Stage { source, .. } => source.class(),
            _ => ErrorClass::Pipeline,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }
}

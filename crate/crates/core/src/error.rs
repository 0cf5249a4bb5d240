use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: malformed token {token:?} at byte offset {offset}")]
    Parse {
        path: PathBuf,
        offset: usize,
        token: String,
    },

    #[error("{0}: signal file contains no samples")]
    EmptySignal(PathBuf),

    #[error("{0}: file name does not match <subject>_<segment>.txt")]
    FileName(PathBuf),

    #[error("subject table is missing required columns: {}", .0.join(", "))]
    Schema(Vec<String>),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("signal too short: need at least {needed} samples, got {got}")]
    Length { needed: usize, got: usize },

    #[error("no cardiac beat found: {0}")]
    NoBeat(String),

    #[error("fiducial geometry error: {0}")]
    Geometry(String),

    #[error("degenerate feature {index} ({name}): zero denominator")]
    DegenerateFeature { index: usize, name: &'static str },

    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("feature block {block}: {source}")]
    Extraction {
        block: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("kernel matrix is not positive definite after jitter escalation")]
    Conditioning,

    #[error("shape mismatch: expected {expected} columns, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("hyperparameter tuning failed: {0}")]
    Tuning(String),

    #[error("report error: {0}")]
    Report(String),

    #[error("missing artifact {path}: run `{producer}` first")]
    MissingArtifact { path: PathBuf, producer: &'static str },

    #[error("config validation failed for keys: {}", .0.join(", "))]
    Config(Vec<String>),

    #[error("lineage mismatch: {0}")]
    Lineage(String),

    #[error("model file format: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub(crate) fn in_block(self, block: &'static str) -> Error {
        Error::Extraction {
            block,
            source: Box::new(self),
        }
    }
}

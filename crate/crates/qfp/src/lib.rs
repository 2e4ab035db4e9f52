//! Experiment harness for encoding-fingerprint attacks and the obfuscation
//! defense: dataset generation, classifier training, evaluation, reports.

pub mod artifacts;
pub mod config;
pub mod pipeline;
pub mod verify;

use std::path::{Path, PathBuf};

pub use config::{DefenseMode, ExperimentConfig};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("dataset was generated with config hash {found}, current config hashes to {expected}; rerun `gen`")]
    HashMismatch { expected: String, found: String },
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Encode(#[from] qfp_core::EncodeError),
    #[error(transparent)]
    Transpile(#[from] qfp_core::TranspileError),
    #[error(transparent)]
    Feature(#[from] qfp_core::FeatureError),
    #[error(transparent)]
    Parse(#[from] qfp_core::ParseError),
    #[error(transparent)]
    Learn(#[from] qfp_learn::LearnError),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit code: 1 usage, 2 verification failure, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Io { .. } | HarnessError::Format { .. } => 3,
            HarnessError::Verification(_) => 2,
            _ => 1,
        }
    }
}

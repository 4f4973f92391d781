use std::path::PathBuf;

use pcqm::estimators::{EstimatorError, SampleError};
use pcqm::evaluate::EvalError;
use pcqm::ingest::IngestError;
use pcqm::simulate::SimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

impl CliError {
    /// 1 configuration/IO, 2 not-applicable estimator, 3 numeric failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Estimator(e) if e.is_not_applicable() => 2,
            CliError::Estimator(e) if e.is_numeric() => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

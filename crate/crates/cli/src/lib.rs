//! Batch driver for `bayes-atlas`: synthetic data generation, atlas runs
//! and the files they leave behind.

pub mod config;
pub mod generate;
pub mod manifest;
pub mod run;

use std::path::{Path, PathBuf};

use bayes_atlas::AtlasError;
use thiserror::Error;

pub use config::{load_config, parse_config, ConfigError, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Atlas(#[from] AtlasError),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl CliError {
    /// 1 for configuration problems, 2 for data and file problems, 3 when
    /// the computation itself fails.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Output { .. } | CliError::Csv { .. } => 2,
            CliError::Atlas(e) => match e {
                AtlasError::InvalidParameter { .. } => 1,
                AtlasError::Shape(_)
                | AtlasError::GridFormat { .. }
                | AtlasError::Dataset(_)
                | AtlasError::Io { .. } => 2,
                _ => 3,
            },
        }
    }

    pub(crate) fn output(path: &Path, source: std::io::Error) -> Self {
        CliError::Output {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn csv(path: &Path, source: csv::Error) -> Self {
        CliError::Csv {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Opens a CSV writer on a fresh file.
pub(crate) fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, AtlasError>;

#[derive(Debug, Error)]
pub enum AtlasError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("spectral field is not Hermitian symmetric (max asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("integration diverged at step {step} of {stage}")]
    Divergence { stage: &'static str, step: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate deformation: zero atlas weight at voxel {voxel}")]
    DegenerateDeformation { voxel: usize },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("all {proposals} HMC proposals rejected for subject {subject}")]
    ChainStuck { subject: usize, proposals: usize },

    #[error("malformed grid file {path}: {reason}")]
    GridFormat { path: PathBuf, reason: String },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl AtlasError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        AtlasError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AtlasError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures rooted in the numerics (divergence, non-convergence,
    /// degenerate weights) rather than configuration or data problems.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            AtlasError::Divergence { .. }
                | AtlasError::Numeric(_)
                | AtlasError::DegenerateDeformation { .. }
                | AtlasError::ChainStuck { .. }
                | AtlasError::NotHermitian { .. }
        )
    }

    pub fn is_data(&self) -> bool {
        matches!(
            self,
            AtlasError::GridFormat { .. } | AtlasError::Dataset(_) | AtlasError::Io { .. }
        )
    }
}

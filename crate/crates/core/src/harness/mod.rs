//! Dataset bundles, configuration, checkpoints and the multi-seed experiment
//! driver behind the command-line tool.

mod bundle;
mod checkpoint;
mod config;
mod convert;
mod experiment;

pub use bundle::{load_bundle, write_bundle, BundleMeta};
pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC};
pub use config::{ExperimentConfig, PRESETS};
pub use convert::convert_tsv;
pub use experiment::{
    ablate, evaluate_params, run_experiment, run_experiment_with, AblationRow, ExperimentReport, RunRecord,
    REPORT_FORMAT_VERSION,
};

use std::path::PathBuf;

use crate::clustering::ClusterError;
use crate::encoder::EncoderError;
use crate::graph::GraphError;
use crate::optimizer::TrainError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("corrupt bundle ({check}): {detail}")]
    CorruptBundle { check: &'static str, detail: String },
    #[error("{file}:{line}: {message}")]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),
    #[error("run {run} failed: {source}")]
    Run {
        run: usize,
        source: Box<HarnessError>,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn corrupt(check: &'static str, detail: impl Into<String>) -> Self {
        Self::CorruptBundle {
            check,
            detail: detail.into(),
        }
    }
}

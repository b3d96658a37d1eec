//! Experiment engine: dataset generation, training, equilibrium allocation
//! against a static-power baseline, and CSV/SVG result emission.

pub mod baseline;
pub mod compare;
pub mod config;
pub mod output;
pub mod pipeline;
pub mod svg;

pub use baseline::{static_baseline, BaselineOutcome};
pub use compare::{compare_sample, run_comparison, ComparisonReport, SampleRow, Summary};
pub use config::{GameSettings, PredictionOrder, ScenarioConfig};
pub use output::{emit_outputs, PredictionRow};
pub use pipeline::{allocation_round, prepare, Prepared, RoundOutcome};

use harshnet_core::envgen::DatasetError;
use harshnet_core::game::GameError;
use harshnet_core::predictor::PredictorError;
use harshnet_core::servicemgmt::ServiceError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("{failed} of {total} equilibria did not converge (tolerance {tolerance})")]
    NonConvergence {
        failed: usize,
        total: usize,
        tolerance: f64,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error("cannot access {path}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

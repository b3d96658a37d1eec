//! Three-branch 1-D CNN that maps 32 environmental features to the
//! throughput the environment leaves available.

mod adam;
mod layers;
mod metrics;
mod network;
mod persist;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use layers::{max_pool, xavier_bound, Conv1d, Tensor1D};
pub use metrics::{evaluate, regression_metrics, RegressionMetrics};
pub use network::{backward, forward, xavier_init, Architecture, ForwardCache, NetworkParams};
pub use persist::{load_model, save_model, ModelFile, TensorRecord, MODEL_FORMAT};
pub use train::{batches_per_epoch, clamp_prediction, train, TrainConfig, TrainedModel};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("invalid architecture: {0}")]
    Architecture(String),
    #[error("input has {found} features, expected {expected}")]
    InputLength { expected: usize, found: usize },
    #[error("forward cache does not belong to these parameters")]
    CacheMismatch,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("{predictions} predictions for {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("test labels have zero variance; R-squared is undefined")]
    ZeroVarianceLabels,
    #[error("a test label is zero; relative error is undefined")]
    ZeroLabel,
    #[error("invalid hyperparameter: {0}")]
    BadHyperparameter(String),
    #[error("training produced non-finite parameters")]
    Diverged,
    #[error("model file: {0}")]
    ModelFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

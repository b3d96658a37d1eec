use serde::{Deserialize, Serialize};

use super::train::TrainedModel;
use super::PredictorError;
use crate::envgen::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub r_squared: f64,
    /// Label units (Mbps).
    pub rmse: f64,
    /// RMSE divided by the training label standard deviation, when known.
    pub rmse_normalized: Option<f64>,
    /// Mean of `|r̂ − r| / r`, in percent.
    pub relative_error_pct: f64,
}

pub fn regression_metrics(
    predicted: &[f64],
    actual: &[f64],
) -> Result<RegressionMetrics, PredictorError> {
    if actual.is_empty() {
        return Err(PredictorError::EmptyDataset);
    }
    if predicted.len() != actual.len() {
        return Err(PredictorError::LengthMismatch {
            predictions: predicted.len(),
            labels: actual.len(),
        });
    }
    let n = actual.len() as f64;
    let mean = actual.iter().sum::<f64>() / n;
    let ss_tot: f64 = actual.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(PredictorError::ZeroVarianceLabels);
    }
    if actual.contains(&0.0) {
        return Err(PredictorError::ZeroLabel);
    }
    let ss_res: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, y)| (p - y).powi(2))
        .sum();
    let rel: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, y)| ((p - y) / y).abs())
        .sum::<f64>()
        / n;
    Ok(RegressionMetrics {
        r_squared: 1.0 - ss_res / ss_tot,
        rmse: (ss_res / n).sqrt(),
        rmse_normalized: None,
        relative_error_pct: 100.0 * rel,
    })
}

/// Scores clamped predictions against the test labels.
pub fn evaluate(model: &TrainedModel, test: &Dataset) -> Result<RegressionMetrics, PredictorError> {
    let predicted = test
        .samples
        .iter()
        .map(|s| model.predict(&s.features()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut metrics = regression_metrics(&predicted, &test.labels())?;
    metrics.rmse_normalized = Some(metrics.rmse / model.normalization.label_std);
    Ok(metrics)
}

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::network::{accumulate_gradient, forward, xavier_init_with, Architecture, NetworkParams};
use super::PredictorError;
use crate::envgen::{Dataset, Normalization};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Drives both initialization and the per-epoch shuffles.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 8,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

/// A fitted regressor together with everything needed to apply it to raw features.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub params: NetworkParams,
    pub normalization: Normalization,
    pub config: TrainConfig,
    /// Mean squared error on normalized labels, one entry per epoch.
    pub loss_history: Vec<f64>,
}

impl TrainedModel {
    /// Network output in label units, before clamping.
    pub fn predict_raw(&self, features: &[f64]) -> Result<f64, PredictorError> {
        if features.len() != self.params.architecture.input_len {
            return Err(PredictorError::InputLength {
                expected: self.params.architecture.input_len,
                found: features.len(),
            });
        }
        let z = self.normalization.features(features);
        let (y, _) = forward(&self.params, &z)?;
        Ok(self.normalization.denormalize_label(y))
    }

    /// Predicted available throughput; never negative.
    pub fn predict(&self, features: &[f64]) -> Result<f64, PredictorError> {
        Ok(clamp_prediction(self.predict_raw(features)?))
    }
}

pub fn clamp_prediction(raw: f64) -> f64 {
    raw.max(0.0)
}

/// Number of mini-batches per epoch; a short final batch is kept.
pub fn batches_per_epoch(samples: usize, batch_size: usize) -> usize {
    samples.div_ceil(batch_size)
}

/// Mini-batch Adam on mean squared error over z-scored labels.
///
/// Features and labels are normalized with the dataset's statistics (fitted
/// here if the dataset carries none).
pub fn train(
    data: &Dataset,
    arch: &Architecture,
    config: &TrainConfig,
) -> Result<TrainedModel, PredictorError> {
    if data.is_empty() {
        return Err(PredictorError::EmptyDataset);
    }
    if config.batch_size == 0 {
        return Err(PredictorError::BadHyperparameter(
            "batch size must be positive".into(),
        ));
    }
    let normalization = match &data.normalization {
        Some(n) => n.clone(),
        None => Normalization::fit(&data.samples).map_err(|_| PredictorError::EmptyDataset)?,
    };
    let inputs: Vec<Vec<f64>> = data
        .samples
        .iter()
        .map(|s| normalization.features(&s.features()))
        .collect();
    let targets: Vec<f64> = data
        .samples
        .iter()
        .map(|s| normalization.label(s.throughput))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = xavier_init_with(arch, &mut rng)?;
    let mut adam = AdamState::new(&params, config.adam);
    let mut grad = params.zeros_like();
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut loss_history = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            grad = grad_reset(grad);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let (y, cache) = forward(&params, &inputs[i])?;
                let residual = y - targets[i];
                epoch_loss += residual * residual;
                accumulate_gradient(&params, &cache, 2.0 * residual * scale, &mut grad)?;
            }
            adam.update(&mut params, &grad);
        }
        loss_history.push(epoch_loss / inputs.len() as f64);
    }
    if !params.is_finite() {
        return Err(PredictorError::Diverged);
    }
    Ok(TrainedModel {
        params,
        normalization,
        config: config.clone(),
        loss_history,
    })
}

fn grad_reset(mut grad: NetworkParams) -> NetworkParams {
    for t in grad.tensors_mut() {
        t.fill(0.0);
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envgen::{generate_dataset, split};
    use crate::predictor::xavier_init;

    fn small_arch() -> Architecture {
        Architecture {
            channels: vec![4, 4, 2],
            ..Architecture::standard()
        }
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let ds = generate_dataset(40, 1).unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            seed: 17,
            ..TrainConfig::default()
        };
        let model = train(&ds, &small_arch(), &cfg).unwrap();
        assert_eq!(model.params, xavier_init(&small_arch(), 17).unwrap());
        assert!(model.loss_history.is_empty());
    }

    #[test]
    fn empty_dataset_rejected() {
        let mut ds = generate_dataset(4, 1).unwrap();
        ds.samples.clear();
        assert!(matches!(
            train(&ds, &small_arch(), &TrainConfig::default()),
            Err(PredictorError::EmptyDataset)
        ));
    }

    #[test]
    fn reference_batches() {
        assert_eq!(batches_per_epoch(312, 8), 39);
        assert_eq!(batches_per_epoch(13, 8), 2);
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let ds = generate_dataset(60, 2).unwrap();
        let (tr, _) = split(&ds, 0.75, 2).unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            seed: 5,
            ..TrainConfig::default()
        };
        let a = train(&tr, &small_arch(), &cfg).unwrap();
        let b = train(&tr, &small_arch(), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.loss_history.len(), 3);
    }

    #[test]
    fn clamp_only_below_zero() {
        assert_eq!(clamp_prediction(-3.2), 0.0);
        assert_eq!(clamp_prediction(41.5), 41.5);
    }
}

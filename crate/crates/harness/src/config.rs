use std::path::{Path, PathBuf};

use harshnet_core::envgen::{GeneratorParams, OracleConstants, DEFAULT_SAMPLES};
use harshnet_core::game::{GainMatrix, GainModel, GameConfig, DEFAULT_EPSILON};
use harshnet_core::predictor::{Architecture, TrainConfig};
use harshnet_core::servicemgmt::{form_groups, ServiceDescriptor};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameSettings {
    pub bandwidth_mhz: f64,
    pub noise_power: f64,
    pub p_max: f64,
    pub epsilon: f64,
    /// Channel draws for sample `id` use a seed derived from this and `id`.
    pub gain_seed: u64,
    /// Random initial powers are seeded the same way.
    pub init_seed: u64,
    pub gains: GainModel,
}

impl Default for GameSettings {
    fn default() -> Self {
        Self {
            bandwidth_mhz: 20.0,
            noise_power: 1.0,
            p_max: 1.0,
            epsilon: DEFAULT_EPSILON,
            gain_seed: 2024,
            init_seed: 99,
            gains: GainModel::default(),
        }
    }
}

impl GameSettings {
    /// Game among `weights.len()` services with `gains`; the price is left at 0.
    pub fn game_config(&self, weights: Vec<f64>, gains: GainMatrix) -> GameConfig {
        GameConfig {
            weights,
            gains,
            bandwidth: self.bandwidth_mhz,
            noise_power: self.noise_power,
            p_max: self.p_max,
            lambda: 0.0,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PredictionOrder {
    #[default]
    Ascending,
    Chronological,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub dataset_seed: u64,
    pub dataset_size: usize,
    pub split_fraction: f64,
    pub generator: GeneratorParams,
    pub oracle: OracleConstants,
    pub architecture: Architecture,
    pub training: TrainConfig,
    pub game: GameSettings,
    pub roster: Vec<ServiceDescriptor>,
    /// Fixed transmit power of every admitted baseline service, in W.
    pub p_static: f64,
    pub lambda_search: harshnet_core::game::LambdaSearch,
    /// Largest fraction of non-converged samples before `compare` fails.
    pub non_convergence_tolerance: f64,
    /// Ordering of the prediction plot.
    pub prediction_order: PredictionOrder,
    pub output_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            dataset_seed: 7,
            dataset_size: DEFAULT_SAMPLES,
            split_fraction: 0.75,
            generator: GeneratorParams::default(),
            oracle: OracleConstants::default(),
            architecture: Architecture::standard(),
            training: TrainConfig::default(),
            game: GameSettings::default(),
            roster: default_roster(),
            p_static: 0.8,
            lambda_search: Default::default(),
            non_convergence_tolerance: 0.01,
            prediction_order: PredictionOrder::Ascending,
            output_dir: PathBuf::from("results"),
        }
    }
}

/// Six functions, three of them with a backup.
pub fn default_roster() -> Vec<ServiceDescriptor> {
    [
        (1, "protection", 0.25, 2.0),
        (2, "monitoring", 0.20, 1.5),
        (3, "video", 0.18, 3.0),
        (4, "telemetry", 0.15, 0.5),
        (5, "control", 0.12, 1.0),
        (6, "metering", 0.10, 0.5),
        (7, "protection", 0.22, 2.0),
        (8, "video", 0.14, 2.5),
        (9, "monitoring", 0.16, 1.0),
    ]
    .into_iter()
    .map(|(id, tag, w, floor)| ServiceDescriptor::new(id, tag, w, floor))
    .collect()
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Validation(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Replaces every seed in the scenario.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.dataset_seed = seed;
        self.training.seed = seed;
        self.game.gain_seed = seed;
        self.game.init_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Validation(m.to_string()));
        if self.dataset_size < 2 {
            return bad("dataset_size must be at least 2");
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return bad("split_fraction must lie in (0, 1)");
        }
        self.architecture
            .validate()
            .map_err(|e| HarnessError::Validation(e.to_string()))?;
        if self.training.batch_size == 0 {
            return bad("training.batch_size must be positive");
        }
        let g = &self.game;
        if !(g.bandwidth_mhz > 0.0 && g.noise_power > 0.0 && g.p_max > 0.0 && g.p_max.is_finite()) {
            return bad("game bandwidth, noise power and p_max must be positive and finite");
        }
        if !(g.epsilon > 0.0 && g.epsilon.is_finite()) {
            return bad("game epsilon must be positive");
        }
        if !(g.gains.dominance_ratio > 0.0 && g.gains.direct_spread_decades >= 0.0) {
            return bad("gain model needs a positive dominance ratio and non-negative spread");
        }
        if !(self.p_static > 0.0 && self.p_static <= g.p_max) {
            return bad("p_static must lie in (0, p_max]");
        }
        let s = &self.lambda_search;
        if !(s.lambda_lo > 0.0 && s.lambda_hi_start > 0.0 && s.lambda_hi_max >= s.lambda_lo)
            || s.max_iter == 0
        {
            return bad("lambda_search bounds are invalid");
        }
        if !(0.0..=1.0).contains(&self.non_convergence_tolerance) {
            return bad("non_convergence_tolerance must lie in [0, 1]");
        }
        if self.roster.is_empty() {
            return bad("roster is empty");
        }
        form_groups(&self.roster).map_err(|e| HarnessError::Validation(e.to_string()))?;
        Ok(())
    }
}

/// Seed for per-sample draws, decorrelated across neighbouring ids.
pub fn sample_seed(base: u64, id: usize) -> u64 {
    base ^ (id as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scenario_is_valid() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.p_static, 0.8 * cfg.game.p_max);
        let groups = form_groups(&cfg.roster).unwrap();
        assert_eq!(groups.len(), 6);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: ScenarioConfig =
            serde_json::from_str(r#"{"dataset_size": 40, "game": {"p_max": 2.0}}"#).unwrap();
        assert_eq!(cfg.dataset_size, 40);
        assert_eq!(cfg.game.p_max, 2.0);
        assert_eq!(cfg.game.bandwidth_mhz, 20.0);
        assert_eq!(cfg.training.epochs, 50);
    }

    #[test]
    fn invalid_fields_rejected() {
        let cfg = ScenarioConfig {
            p_static: 1.5,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(HarnessError::Validation(_))));
        let cfg = ScenarioConfig {
            split_fraction: 1.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let mut cfg = ScenarioConfig::default();
        cfg.roster.push(cfg.roster[0].clone());
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn seed_override_touches_every_stream() {
        let cfg = ScenarioConfig::default().with_seed(5);
        assert_eq!(
            (
                cfg.dataset_seed,
                cfg.training.seed,
                cfg.game.gain_seed,
                cfg.game.init_seed
            ),
            (5, 5, 5, 5)
        );
    }

    #[test]
    fn sample_seeds_differ() {
        assert_ne!(sample_seed(1, 0), sample_seed(1, 1));
        assert_eq!(sample_seed(1, 3), sample_seed(1, 3));
    }
}

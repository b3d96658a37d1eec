use std::collections::BTreeMap;

use harshnet_core::envgen::{generate_dataset_with, split, Dataset};
use harshnet_core::game::{tune_lambda, LambdaTuning, PowerProfile};
use harshnet_core::predictor::{evaluate, train, RegressionMetrics, TrainedModel};
use harshnet_core::servicemgmt::{
    active_services, reorganize, Reorganization, ServiceGroup, ServiceId,
};

use crate::config::{sample_seed, ScenarioConfig};
use crate::HarnessError;

/// Dataset, split and fitted predictor for a scenario.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub dataset: Dataset,
    pub train: Dataset,
    pub test: Dataset,
    pub model: TrainedModel,
    pub metrics: RegressionMetrics,
}

pub fn generate(scenario: &ScenarioConfig) -> Result<Dataset, HarnessError> {
    Ok(generate_dataset_with(
        scenario.dataset_size,
        scenario.dataset_seed,
        &scenario.generator,
        &scenario.oracle,
    )?)
}

pub fn prepare(scenario: &ScenarioConfig) -> Result<Prepared, HarnessError> {
    scenario.validate()?;
    let dataset = generate(scenario)?;
    let (train_set, test) = split(&dataset, scenario.split_fraction, scenario.dataset_seed)?;
    let model = train(&train_set, &scenario.architecture, &scenario.training)?;
    let metrics = evaluate(&model, &test)?;
    Ok(Prepared {
        dataset,
        train: train_set,
        test,
        model,
        metrics,
    })
}

#[derive(Debug, Clone)]
pub struct RoundOutcome {
    /// Services that played, in game order.
    pub players: Vec<ServiceId>,
    /// `None` when no service was active.
    pub tuning: Option<LambdaTuning>,
    pub reorganization: Reorganization,
}

/// One game among the active services under cap `r_hat`, followed by a
/// reorganization of the groups on the resulting rates.
///
/// Gains and initial powers are drawn from the scenario seeds and `draw`.
pub fn allocation_round(
    scenario: &ScenarioConfig,
    groups: &[ServiceGroup],
    r_hat: f64,
    draw: usize,
    step: u64,
) -> Result<RoundOutcome, HarnessError> {
    let players: Vec<_> = active_services(groups).into_iter().cloned().collect();
    let ids: Vec<ServiceId> = players.iter().map(|s| s.id).collect();
    let mut rates = BTreeMap::new();
    let tuning = if players.is_empty() {
        None
    } else {
        let game = &scenario.game;
        let gains = game
            .gains
            .sample(players.len(), sample_seed(game.gain_seed, draw));
        let cfg = game.game_config(players.iter().map(|s| s.weight).collect(), gains);
        let init =
            PowerProfile::random(players.len(), game.p_max, sample_seed(game.init_seed, draw));
        let cap = r_hat.max(f64::MIN_POSITIVE);
        let t = tune_lambda(&cfg, cap, &init, &scenario.lambda_search)?;
        rates.extend(ids.iter().copied().zip(t.equilibrium.rates.iter().copied()));
        Some(t)
    };
    Ok(RoundOutcome {
        players: ids,
        tuning,
        reorganization: reorganize(groups, r_hat, &rates, step),
    })
}

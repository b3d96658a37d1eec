use harshnet_core::game::{
    find_equilibrium, tune_lambda, EquilibriumResult, GameConfig, GameError, LambdaSearch,
    PowerProfile,
};
use harshnet_core::predictor::RegressionMetrics;
use harshnet_core::servicemgmt::{active_services, form_groups};
use serde::{Deserialize, Serialize};

use crate::baseline::{static_baseline, BaselineOutcome};
use crate::config::{sample_seed, ScenarioConfig};
use crate::output::PredictionRow;
use crate::pipeline::{prepare, Prepared};
use crate::HarnessError;

/// Reference improvements reported for the original measurement campaign.
pub const PAPER_POWER_REDUCTION_PCT: f64 = 22.6;
pub const PAPER_SINR_GAIN_PCT: f64 = 18.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStatus {
    Ok,
    NotConverged,
    CapUnsatisfiable,
}

impl SampleStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleStatus::Ok => "ok",
            SampleStatus::NotConverged => "not_converged",
            SampleStatus::CapUnsatisfiable => "cap_unsatisfiable",
        }
    }
}

/// Per-service averages count rejected or silent services as 0 W and SINR 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub sample_id: usize,
    pub actual: f64,
    pub r_hat: f64,
    pub lambda: f64,
    pub binding: bool,
    pub iterations: usize,
    pub status: SampleStatus,
    pub proposed_power: f64,
    pub proposed_sinr: f64,
    pub proposed_rate: f64,
    pub baseline_power: f64,
    pub baseline_sinr: f64,
    pub baseline_rate: f64,
    pub baseline_admitted: usize,
}

#[derive(Debug, Clone)]
pub struct SampleComparison {
    pub lambda: f64,
    pub binding: bool,
    pub status: SampleStatus,
    pub equilibrium: EquilibriumResult,
    pub baseline: BaselineOutcome,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Proposed allocation (price tuned to `r_hat`) next to the static baseline
/// on the same channel. A zero cap prices every service out.
pub fn compare_sample(
    cfg: &GameConfig,
    r_hat: f64,
    p_static: f64,
    init: &PowerProfile,
    search: &LambdaSearch,
) -> Result<SampleComparison, HarnessError> {
    let baseline = static_baseline(cfg, p_static, r_hat)?;
    let silenced = || {
        find_equilibrium(
            &cfg.with_lambda(search.lambda_hi_max),
            init,
            search.max_iter,
        )
    };
    let (lambda, binding, status, equilibrium) = if r_hat > 0.0 {
        match tune_lambda(cfg, r_hat, init, search) {
            Ok(t) => {
                let status = if t.equilibrium.converged {
                    SampleStatus::Ok
                } else {
                    SampleStatus::NotConverged
                };
                (t.lambda, t.binding, status, t.equilibrium)
            }
            Err(GameError::CapUnsatisfiable { .. }) => (
                search.lambda_hi_max,
                true,
                SampleStatus::CapUnsatisfiable,
                silenced()?,
            ),
            Err(e) => return Err(e.into()),
        }
    } else {
        let eq = silenced()?;
        let status = if eq.converged && eq.total_rate() <= 0.0 {
            SampleStatus::Ok
        } else {
            SampleStatus::CapUnsatisfiable
        };
        (search.lambda_hi_max, true, status, eq)
    };
    Ok(SampleComparison {
        lambda,
        binding,
        status,
        equilibrium,
        baseline,
    })
}

impl SampleComparison {
    fn row(&self, sample_id: usize, actual: f64, r_hat: f64) -> SampleRow {
        SampleRow {
            sample_id,
            actual,
            r_hat,
            lambda: self.lambda,
            binding: self.binding,
            iterations: self.equilibrium.iterations,
            status: self.status,
            proposed_power: mean(self.equilibrium.profile.powers()),
            proposed_sinr: mean(&self.equilibrium.sinr),
            proposed_rate: self.equilibrium.total_rate(),
            baseline_power: mean(self.baseline.profile.powers()),
            baseline_sinr: mean(&self.baseline.sinr),
            baseline_rate: self.baseline.total_rate(),
            baseline_admitted: self.baseline.admitted.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub samples: usize,
    /// Samples entering the averages.
    pub included: usize,
    pub not_converged: usize,
    pub cap_unsatisfiable: usize,
    pub proposed_power: f64,
    pub baseline_power: f64,
    pub proposed_sinr: f64,
    pub baseline_sinr: f64,
    /// dB of the averaged linear SINR.
    pub proposed_sinr_db: f64,
    pub baseline_sinr_db: f64,
    pub proposed_rate: f64,
    pub baseline_rate: f64,
    /// `100·(baseline − proposed)/baseline` on average power.
    pub power_reduction_pct: f64,
    /// `100·(proposed − baseline)/baseline` on average linear SINR.
    pub sinr_gain_pct: f64,
    pub mean_iterations: f64,
    pub max_iterations: usize,
    pub paper_power_reduction_pct: f64,
    pub paper_sinr_gain_pct: f64,
}

impl Summary {
    pub fn from_rows(rows: &[SampleRow]) -> Self {
        let ok: Vec<&SampleRow> = rows
            .iter()
            .filter(|r| r.status == SampleStatus::Ok)
            .collect();
        let avg = |f: fn(&SampleRow) -> f64| mean(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
        let (pp, bp) = (avg(|r| r.proposed_power), avg(|r| r.baseline_power));
        let (ps, bs) = (avg(|r| r.proposed_sinr), avg(|r| r.baseline_sinr));
        let count = |s| rows.iter().filter(|r| r.status == s).count();
        Self {
            samples: rows.len(),
            included: ok.len(),
            not_converged: count(SampleStatus::NotConverged),
            cap_unsatisfiable: count(SampleStatus::CapUnsatisfiable),
            proposed_power: pp,
            baseline_power: bp,
            proposed_sinr: ps,
            baseline_sinr: bs,
            proposed_sinr_db: to_db(ps),
            baseline_sinr_db: to_db(bs),
            proposed_rate: avg(|r| r.proposed_rate),
            baseline_rate: avg(|r| r.baseline_rate),
            power_reduction_pct: 100.0 * (bp - pp) / bp,
            sinr_gain_pct: 100.0 * (ps - bs) / bs,
            mean_iterations: avg(|r| r.iterations as f64),
            max_iterations: ok.iter().map(|r| r.iterations).max().unwrap_or(0),
            paper_power_reduction_pct: PAPER_POWER_REDUCTION_PCT,
            paper_sinr_gain_pct: PAPER_SINR_GAIN_PCT,
        }
    }
}

/// Equilibrium history of one test sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleTrace {
    pub sample_id: usize,
    pub trace: Vec<f64>,
    pub power_trace: Vec<Vec<f64>>,
    pub utility_trace: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub predictor: RegressionMetrics,
    pub services: Vec<u32>,
    pub weights: Vec<f64>,
    pub rows: Vec<SampleRow>,
    pub predictions: Vec<PredictionRow>,
    pub summary: Summary,
    /// History of the first test sample, for the convergence plot.
    pub convergence_example: Option<SampleTrace>,
}

impl ComparisonReport {
    /// Fails when more than `tolerance` of the samples did not converge.
    pub fn check_convergence(&self, tolerance: f64) -> Result<(), HarnessError> {
        let failed = self.summary.not_converged;
        if self.summary.samples > 0 && failed as f64 / self.summary.samples as f64 > tolerance {
            return Err(HarnessError::NonConvergence {
                failed,
                total: self.summary.samples,
                tolerance,
            });
        }
        Ok(())
    }
}

/// Trains the predictor and compares allocations over the test partition.
pub fn run_comparison(
    scenario: &ScenarioConfig,
) -> Result<(ComparisonReport, Vec<SampleTrace>), HarnessError> {
    let prepared = prepare(scenario)?;
    compare_prepared(scenario, &prepared)
}

pub fn compare_prepared(
    scenario: &ScenarioConfig,
    prepared: &Prepared,
) -> Result<(ComparisonReport, Vec<SampleTrace>), HarnessError> {
    let groups = form_groups(&scenario.roster)?;
    let players: Vec<_> = active_services(&groups).into_iter().cloned().collect();
    let weights: Vec<f64> = players.iter().map(|s| s.weight).collect();
    let game = &scenario.game;

    let mut rows = Vec::new();
    let mut traces = Vec::new();
    let mut predicted = Vec::new();
    for sample in &prepared.test.samples {
        let r_hat = prepared.model.predict(&sample.features())?;
        predicted.push(r_hat);
        let gains = game
            .gains
            .sample(players.len(), sample_seed(game.gain_seed, sample.id));
        let cfg = game.game_config(weights.clone(), gains);
        let init = PowerProfile::random(
            players.len(),
            game.p_max,
            sample_seed(game.init_seed, sample.id),
        );
        let c = compare_sample(
            &cfg,
            r_hat,
            scenario.p_static,
            &init,
            &scenario.lambda_search,
        )?;
        rows.push(c.row(sample.id, sample.throughput, r_hat));
        traces.push(SampleTrace {
            sample_id: sample.id,
            trace: c.equilibrium.trace,
            power_trace: c.equilibrium.power_trace,
            utility_trace: c.equilibrium.utility_trace,
        });
    }

    let report = ComparisonReport {
        predictor: prepared.metrics,
        services: players.iter().map(|s| s.id).collect(),
        weights,
        predictions: PredictionRow::build(&prepared.test, &predicted),
        summary: Summary::from_rows(&rows),
        rows,
        convergence_example: traces.first().cloned(),
    };
    Ok((report, traces))
}

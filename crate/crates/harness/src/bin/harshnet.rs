use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use harshnet_core::envgen::{read_csv, split, write_csv, DatasetManifest};
use harshnet_core::predictor::{evaluate, load_model, save_model, train};
use harshnet_core::servicemgmt::{form_groups, to_events_csv, ServiceGroup};
use harshnet_harness::compare::{run_comparison, ComparisonReport};
use harshnet_harness::output::{emit_outputs, render_figures};
use harshnet_harness::pipeline::{allocation_round, generate};
use harshnet_harness::{HarnessError, ScenarioConfig};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "harshnet",
    version,
    about = "Throughput prediction and priced power allocation experiments"
)]
struct Cli {
    /// JSON scenario file; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides every seed in the scenario.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the scenario's output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic dataset (dataset.csv, dataset.json).
    GenData,
    /// Train the predictor on the training split (model.json, training.json).
    Train,
    /// Evaluate a saved model on the test split (evaluation.json).
    Eval {
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Predict throughput for every row of a dataset CSV; writes CSV to stdout.
    Predict {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Run allocation rounds with service-group reorganization
    /// (allocation.json, events.csv).
    Allocate {
        /// Throughput cap per round, in Mbps.
        #[arg(long = "r-hat", value_delimiter = ',', required = true)]
        r_hat: Vec<f64>,
        /// Channel draw index for the gains.
        #[arg(long, default_value_t = 0)]
        sample: usize,
    },
    /// Full comparison against the static baseline (CSV, SVG, report.json).
    Compare,
    /// Re-render the figures from report.json.
    Plot,
}

fn scenario(cli: &Cli) -> Result<ScenarioConfig, HarnessError> {
    let mut cfg = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[derive(Serialize)]
struct RoundRecord {
    step: u64,
    r_hat: f64,
    players: Vec<u32>,
    lambda: Option<f64>,
    powers: Vec<f64>,
    rates: Vec<f64>,
    total_rate: f64,
    converged: bool,
    groups: Vec<ServiceGroup>,
}

fn run(cli: Cli) -> Result<()> {
    let cfg = scenario(&cli)?;
    let out = cfg.output_dir.clone();
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let model_path =
        |given: &Option<PathBuf>| given.clone().unwrap_or_else(|| out.join("model.json"));

    match &cli.command {
        Command::GenData => {
            let ds = generate(&cfg)?;
            write_csv(&ds, &out.join("dataset.csv"))?;
            DatasetManifest::new(&ds, cfg.generator, cfg.oracle)
                .write(&out.join("dataset.json"))?;
            println!(
                "wrote {} samples to {}",
                ds.len(),
                out.join("dataset.csv").display()
            );
        }
        Command::Train => {
            let ds = generate(&cfg)?;
            let (tr, te) = split(&ds, cfg.split_fraction, cfg.dataset_seed)?;
            let model = train(&tr, &cfg.architecture, &cfg.training)?;
            let metrics = evaluate(&model, &te)?;
            save_model(&model, &out.join("model.json"))?;
            write_json(
                &out.join("training.json"),
                &serde_json::json!({
                    "train_samples": tr.len(),
                    "test_samples": te.len(),
                    "loss_history": model.loss_history,
                    "test_metrics": metrics,
                }),
            )?;
            println!(
                "trained on {} samples: test R2 {:.4}, RMSE {:.4} Mbps, relative error {:.2}%",
                tr.len(),
                metrics.r_squared,
                metrics.rmse,
                metrics.relative_error_pct
            );
        }
        Command::Eval { model } => {
            let model = load_model(&model_path(model))?;
            let ds = generate(&cfg)?;
            let (_, te) = split(&ds, cfg.split_fraction, cfg.dataset_seed)?;
            let metrics = evaluate(&model, &te)?;
            write_json(&out.join("evaluation.json"), &metrics)?;
            println!(
                "test R2 {:.4}, RMSE {:.4} Mbps, relative error {:.2}%",
                metrics.r_squared, metrics.rmse, metrics.relative_error_pct
            );
        }
        Command::Predict { input, model } => {
            let model = load_model(&model_path(model))?;
            let ds = read_csv(input, cfg.dataset_seed)?;
            let mut csv = String::from("row,predicted\n");
            for s in &ds.samples {
                writeln!(csv, "{},{}", s.id, model.predict(&s.features())?)?;
            }
            match std::io::stdout().lock().write_all(csv.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
        Command::Allocate { r_hat, sample } => {
            let mut groups = form_groups(&cfg.roster)?;
            let mut rounds = Vec::new();
            let mut events = Vec::new();
            for (step, &cap) in r_hat.iter().enumerate() {
                let round = allocation_round(&cfg, &groups, cap, *sample, step as u64)?;
                let eq = round.tuning.as_ref().map(|t| &t.equilibrium);
                rounds.push(RoundRecord {
                    step: step as u64,
                    r_hat: cap,
                    players: round.players.clone(),
                    lambda: round.tuning.as_ref().map(|t| t.lambda),
                    powers: eq.map(|e| e.profile.0.clone()).unwrap_or_default(),
                    rates: eq.map(|e| e.rates.clone()).unwrap_or_default(),
                    total_rate: eq.map_or(0.0, |e| e.total_rate()),
                    converged: eq.is_none_or(|e| e.converged),
                    groups: round.reorganization.groups.clone(),
                });
                println!(
                    "round {step}: cap {cap} Mbps, {} services, total rate {:.4} Mbps, {} events",
                    round.players.len(),
                    eq.map_or(0.0, |e| e.total_rate()),
                    round.reorganization.events.len()
                );
                events.extend(round.reorganization.events);
                groups = round.reorganization.groups;
            }
            write_json(&out.join("allocation.json"), &rounds)?;
            std::fs::write(out.join("events.csv"), to_events_csv(&events))?;
        }
        Command::Compare => {
            let (report, traces) = run_comparison(&cfg)?;
            emit_outputs(&report, &traces, &out, cfg.prediction_order)?;
            let s = &report.summary;
            println!(
                "{} samples ({} included): power {:.4} W vs {:.4} W ({:+.1}% reduction), SINR {:.4} vs {:.4} ({:+.1}% gain)",
                s.samples,
                s.included,
                s.proposed_power,
                s.baseline_power,
                s.power_reduction_pct,
                s.proposed_sinr,
                s.baseline_sinr,
                s.sinr_gain_pct
            );
            report.check_convergence(cfg.non_convergence_tolerance)?;
        }
        Command::Plot => {
            let path = out.join("report.json");
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading {}", path.display()))?;
            let report: ComparisonReport = serde_json::from_str(&text)?;
            for (name, svg) in render_figures(&report, cfg.prediction_order) {
                std::fs::write(out.join(&name), svg)?;
                println!("wrote {}", out.join(name).display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<HarnessError>() {
                Some(HarnessError::Validation(_)) => ExitCode::from(2),
                Some(HarnessError::NonConvergence { .. }) => ExitCode::from(3),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

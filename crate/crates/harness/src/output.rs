use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use harshnet_core::envgen::Dataset;
use serde::{Deserialize, Serialize};

use crate::compare::{to_db, ComparisonReport, SampleRow, SampleTrace};
use crate::config::PredictionOrder;
use crate::svg::{LineChart, Series};
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub sample_id: usize,
    /// Position in the test partition sorted by id.
    pub chronological_index: usize,
    /// Position in the test partition sorted by true throughput.
    pub ascending_rank: usize,
    pub actual: f64,
    pub predicted: f64,
}

impl PredictionRow {
    pub fn build(test: &Dataset, predicted: &[f64]) -> Vec<Self> {
        let mut rows: Vec<Self> = test
            .samples
            .iter()
            .zip(predicted)
            .enumerate()
            .map(|(i, (s, &p))| Self {
                sample_id: s.id,
                chronological_index: i,
                ascending_rank: 0,
                actual: s.throughput,
                predicted: p,
            })
            .collect();
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.sort_by(|&a, &b| rows[a].actual.total_cmp(&rows[b].actual).then(a.cmp(&b)));
        for (rank, i) in order.into_iter().enumerate() {
            rows[i].ascending_rank = rank;
        }
        rows
    }
}

pub const METRICS_HEADER: &str = "sample_id,actual,r_hat,lambda,binding,iterations,status,\
proposed_power,proposed_sinr,proposed_sinr_db,proposed_rate,\
baseline_power,baseline_sinr,baseline_sinr_db,baseline_rate,baseline_admitted";

pub fn metrics_csv(rows: &[SampleRow]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.sample_id,
            r.actual,
            r.r_hat,
            r.lambda,
            r.binding,
            r.iterations,
            r.status.as_str(),
            r.proposed_power,
            r.proposed_sinr,
            to_db(r.proposed_sinr),
            r.proposed_rate,
            r.baseline_power,
            r.baseline_sinr,
            to_db(r.baseline_sinr),
            r.baseline_rate,
            r.baseline_admitted
        );
    }
    out
}

/// One row per sweep, sweep 0 being the initial profile (no difference yet).
pub fn convergence_csv(services: usize, traces: &[SampleTrace]) -> String {
    let mut out = String::from("sample_id,sweep,difference");
    for l in 0..services {
        let _ = write!(out, ",power_{l}");
    }
    for l in 0..services {
        let _ = write!(out, ",utility_{l}");
    }
    out.push('\n');
    for t in traces {
        for (sweep, (powers, utilities)) in t.power_trace.iter().zip(&t.utility_trace).enumerate() {
            let _ = write!(out, "{},{},", t.sample_id, sweep);
            if sweep > 0 {
                let _ = write!(out, "{}", t.trace[sweep - 1]);
            }
            for v in powers.iter().chain(utilities) {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
    }
    out
}

pub fn prediction_csv(rows: &[PredictionRow]) -> String {
    let mut out = String::from("sample_id,chronological_index,ascending_rank,actual,predicted\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.sample_id, r.chronological_index, r.ascending_rank, r.actual, r.predicted
        );
    }
    out
}

pub fn prediction_chart(rows: &[PredictionRow], order: PredictionOrder) -> LineChart {
    let key = |r: &PredictionRow| match order {
        PredictionOrder::Ascending => r.ascending_rank,
        PredictionOrder::Chronological => r.chronological_index,
    };
    let mut sorted: Vec<&PredictionRow> = rows.iter().collect();
    sorted.sort_by_key(|r| key(r));
    let x_label = match order {
        PredictionOrder::Ascending => "test sample (ascending true throughput)",
        PredictionOrder::Chronological => "test sample (chronological)",
    };
    LineChart::new(
        "(a) Throughput prediction on the test set",
        x_label,
        "throughput (Mbps)",
    )
    .with(Series::new(
        "ground truth",
        sorted.iter().map(|r| (key(r) as f64, r.actual)).collect(),
    ))
    .with(
        Series::new(
            "predicted",
            sorted
                .iter()
                .map(|r| (key(r) as f64, r.predicted))
                .collect(),
        )
        .dashed(),
    )
}

pub fn convergence_chart(trace: Option<&SampleTrace>, services: &[u32]) -> LineChart {
    let mut chart = LineChart::new(
        "(b) Best-response convergence",
        "iteration",
        "transmit power (W)",
    );
    if let Some(t) = trace {
        for (l, id) in services.iter().enumerate() {
            let points = t
                .power_trace
                .iter()
                .enumerate()
                .map(|(j, p)| (j as f64, p[l]))
                .collect();
            chart = chart.with(Series::new(format!("service {id}"), points));
        }
    }
    chart
}

fn comparison_chart(
    title: &str,
    y_label: &str,
    rows: &[SampleRow],
    f: fn(&SampleRow) -> (f64, f64),
) -> LineChart {
    let ok: Vec<&SampleRow> = rows
        .iter()
        .filter(|r| r.status == crate::compare::SampleStatus::Ok)
        .collect();
    let proposed = ok
        .iter()
        .enumerate()
        .map(|(i, r)| (i as f64, f(r).0))
        .collect();
    let baseline = ok
        .iter()
        .enumerate()
        .map(|(i, r)| (i as f64, f(r).1))
        .collect();
    LineChart::new(title, "test sample", y_label)
        .with(Series::new("proposed", proposed))
        .with(Series::new("static baseline", baseline).dashed())
}

/// Writes CSVs, `report.json` and the four figures into `dir`.
pub fn emit_outputs(
    report: &ComparisonReport,
    traces: &[SampleTrace],
    dir: &Path,
    order: PredictionOrder,
) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, contents: String| -> Result<(), HarnessError> {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| HarnessError::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    put("metrics.csv", metrics_csv(&report.rows))?;
    put(
        "convergence.csv",
        convergence_csv(report.services.len(), traces),
    )?;
    put("prediction.csv", prediction_csv(&report.predictions))?;
    put("report.json", serde_json::to_string_pretty(report)? + "\n")?;
    for (name, svg) in render_figures(report, order) {
        put(&name, svg)?;
    }
    Ok(written)
}

pub fn render_figures(report: &ComparisonReport, order: PredictionOrder) -> Vec<(String, String)> {
    vec![
        (
            "fig4a_prediction.svg".into(),
            prediction_chart(&report.predictions, order).render(),
        ),
        (
            "fig4b_convergence.svg".into(),
            convergence_chart(report.convergence_example.as_ref(), &report.services).render(),
        ),
        (
            "fig4c_power.svg".into(),
            comparison_chart(
                "(c) Average transmit power",
                "average power (W)",
                &report.rows,
                |r| (r.proposed_power, r.baseline_power),
            )
            .render(),
        ),
        (
            "fig4d_sinr.svg".into(),
            comparison_chart(
                "(d) Average SINR",
                "average SINR (linear)",
                &report.rows,
                |r| (r.proposed_sinr, r.baseline_sinr),
            )
            .render(),
        ),
    ]
}

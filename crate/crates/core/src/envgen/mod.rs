//! Synthetic harsh-environment measurement campaigns.
//!
//! Each sample carries radiation power density at 30 positions, temperature
//! and humidity, labelled with [`OracleConstants::throughput`] plus 1%
//! multiplicative Gaussian noise. Samples are taken three times a day over
//! non-consecutive days spread from January to October.

mod io;
mod oracle;

pub use io::{parse_csv, read_csv, to_csv_string, write_csv, DatasetManifest, CSV_HEADER};
pub use oracle::OracleConstants;

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const EMI_POSITIONS: usize = 30;
/// EMI positions plus temperature and humidity.
pub const FEATURES: usize = EMI_POSITIONS + 2;
/// Size of the reference measurement campaign.
pub const DEFAULT_SAMPLES: usize = 416;

const SAMPLES_PER_DAY: usize = 3;
/// Jan 1 to Oct 31.
const CAMPAIGN_DAYS: f64 = 304.0;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset must contain at least one sample")]
    Empty,
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("split of {n} samples at fraction {fraction} leaves an empty partition")]
    DegenerateSplit { n: usize, fraction: f64 },
    #[error("sample {id}: {reason}")]
    InvalidSample { id: usize, reason: String },
    #[error("csv line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSample {
    /// Chronological index within the campaign.
    pub id: usize,
    pub emi: [f64; EMI_POSITIONS],
    pub temperature: f64,
    pub humidity: f64,
    /// Label, Mbps.
    pub throughput: f64,
}

impl EnvironmentSample {
    pub fn features(&self) -> [f64; FEATURES] {
        let mut out = [0.0; FEATURES];
        out[..EMI_POSITIONS].copy_from_slice(&self.emi);
        out[EMI_POSITIONS] = self.temperature;
        out[EMI_POSITIONS + 1] = self.humidity;
        out
    }

    pub fn mean_emi(&self) -> f64 {
        self.emi.iter().sum::<f64>() / EMI_POSITIONS as f64
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let fail = |reason: String| {
            Err(DatasetError::InvalidSample {
                id: self.id,
                reason,
            })
        };
        if let Some(j) = self.emi.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return fail(format!(
                "emi_{j:02} = {} is not a non-negative number",
                self.emi[j]
            ));
        }
        if !self.temperature.is_finite() {
            return fail("temperature is not finite".into());
        }
        if !(0.0..=100.0).contains(&self.humidity) {
            return fail(format!("humidity {} outside [0, 100]", self.humidity));
        }
        if !self.throughput.is_finite() || self.throughput < 0.0 {
            return fail(format!("throughput {} is negative", self.throughput));
        }
        Ok(())
    }
}

/// Parameters of the synthetic environment process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorParams {
    /// Lag-1 correlation of the log-EMI field between neighbouring positions.
    pub spatial_correlation: f64,
    /// Standard deviation of the per-position log-EMI field.
    pub spatial_log_sd: f64,
    /// Median radiation density when the load process sits at zero.
    pub emi_median: f64,
    /// AR(1) coefficient of the power-station load process between samples.
    pub load_persistence: f64,
    pub load_innovation_sd: f64,
    /// Log-level shift of EMI at 00:00, 08:00 and 16:00.
    pub load_diurnal: [f64; SAMPLES_PER_DAY],
    pub temperature_mean_c: f64,
    pub temperature_seasonal_c: f64,
    pub temperature_diurnal_c: [f64; SAMPLES_PER_DAY],
    pub temperature_sd_c: f64,
    pub humidity_mean_pct: f64,
    pub humidity_seasonal_pct: f64,
    pub humidity_diurnal_pct: [f64; SAMPLES_PER_DAY],
    pub humidity_sd_pct: f64,
    /// Label noise standard deviation as a fraction of the label.
    pub label_noise: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            spatial_correlation: 0.85,
            spatial_log_sd: 0.35,
            emi_median: 2.5,
            load_persistence: 0.6,
            load_innovation_sd: 0.7,
            load_diurnal: [-0.4, 0.5, 0.2],
            temperature_mean_c: 13.0,
            temperature_seasonal_c: 13.0,
            temperature_diurnal_c: [-3.0, 4.0, 1.0],
            temperature_sd_c: 1.5,
            humidity_mean_pct: 62.0,
            humidity_seasonal_pct: 18.0,
            humidity_diurnal_pct: [8.0, -10.0, -2.0],
            humidity_sd_pct: 7.0,
            label_noise: 0.01,
        }
    }
}

/// Per-feature z-score statistics, plus the label's, from a training partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    pub label_mean: f64,
    pub label_std: f64,
}

impl Normalization {
    pub fn fit(samples: &[EnvironmentSample]) -> Result<Self, DatasetError> {
        if samples.is_empty() {
            return Err(DatasetError::Empty);
        }
        let n = samples.len() as f64;
        let mut mean = vec![0.0; FEATURES];
        for s in samples {
            for (m, v) in mean.iter_mut().zip(s.features()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; FEATURES];
        for s in samples {
            for ((acc, v), m) in var.iter_mut().zip(s.features()).zip(&mean) {
                *acc += (v - m) * (v - m);
            }
        }
        let feature_std = var.into_iter().map(|v| guard_std((v / n).sqrt())).collect();
        let label_mean = samples.iter().map(|s| s.throughput).sum::<f64>() / n;
        let label_var = samples
            .iter()
            .map(|s| (s.throughput - label_mean).powi(2))
            .sum::<f64>()
            / n;
        Ok(Self {
            feature_mean: mean,
            feature_std,
            label_mean,
            label_std: guard_std(label_var.sqrt()),
        })
    }

    pub fn features(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(&self.feature_mean)
            .zip(&self.feature_std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn label(&self, throughput: f64) -> f64 {
        (throughput - self.label_mean) / self.label_std
    }

    pub fn denormalize_label(&self, z: f64) -> f64 {
        z * self.label_std + self.label_mean
    }
}

fn guard_std(s: f64) -> f64 {
    if s > 1e-12 {
        s
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: Vec<EnvironmentSample>,
    pub seed: u64,
    /// Set on both halves of a [`split`], always fitted on the training half.
    pub normalization: Option<Normalization>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.throughput).collect()
    }
}

/// Generates `n` seeded samples with the default process and oracle.
pub fn generate_dataset(n: usize, seed: u64) -> Result<Dataset, DatasetError> {
    generate_dataset_with(
        n,
        seed,
        &GeneratorParams::default(),
        &OracleConstants::default(),
    )
}

pub fn generate_dataset_with(
    n: usize,
    seed: u64,
    params: &GeneratorParams,
    oracle: &OracleConstants,
) -> Result<Dataset, DatasetError> {
    if n == 0 {
        return Err(DatasetError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let days = n.div_ceil(SAMPLES_PER_DAY);
    let rho = params.spatial_correlation;
    let field_innovation = (1.0 - rho * rho).sqrt();
    // Stationary start for the load process.
    let mut load = params.load_innovation_sd / (1.0 - params.load_persistence.powi(2)).sqrt()
        * normal(&mut rng);
    let mut samples = Vec::with_capacity(n);
    for id in 0..n {
        let slot = id % SAMPLES_PER_DAY;
        let day = id / SAMPLES_PER_DAY;
        let day_of_year = (day as f64 * CAMPAIGN_DAYS / days as f64).floor();
        // Peaks mid-July.
        let season = (2.0 * PI * (day_of_year - 105.0) / 365.0).sin();

        load = params.load_persistence * load + params.load_innovation_sd * normal(&mut rng);
        let level = params.emi_median * (load + params.load_diurnal[slot]).exp();
        let mut emi = [0.0; EMI_POSITIONS];
        let mut z: f64 = normal(&mut rng);
        let sd = params.spatial_log_sd;
        for (j, e) in emi.iter_mut().enumerate() {
            if j > 0 {
                z = rho * z + field_innovation * normal(&mut rng);
            }
            *e = level * (sd * z - 0.5 * sd * sd).exp();
        }

        let temperature = params.temperature_mean_c
            + params.temperature_seasonal_c * season
            + params.temperature_diurnal_c[slot]
            + params.temperature_sd_c * normal(&mut rng);
        let humidity = (params.humidity_mean_pct
            + params.humidity_seasonal_pct * season
            + params.humidity_diurnal_pct[slot]
            + params.humidity_sd_pct * normal(&mut rng))
        .clamp(0.0, 100.0);

        let mut sample = EnvironmentSample {
            id,
            emi,
            temperature,
            humidity,
            throughput: 0.0,
        };
        let clean = oracle.throughput(&sample.features());
        sample.throughput = (clean * (1.0 + params.label_noise * normal(&mut rng))).max(0.0);
        samples.push(sample);
    }
    Ok(Dataset {
        samples,
        seed,
        normalization: None,
    })
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Seeded disjoint partition with `⌊n·fraction⌋` training samples.
///
/// Both halves keep chronological order and carry normalization statistics
/// fitted on the training half.
pub fn split(
    ds: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DatasetError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::BadFraction(train_fraction));
    }
    let n = ds.len();
    // Absorb representation error such as 0.29 * 100 = 28.999999999999996.
    let n_train = (n as f64 * train_fraction + 1e-9).floor() as usize;
    if n_train == 0 || n_train >= n {
        return Err(DatasetError::DegenerateSplit {
            n,
            fraction: train_fraction,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (train_idx, test_idx) = order.split_at(n_train);
    let pick = |idx: &[usize]| {
        let mut idx = idx.to_vec();
        idx.sort_unstable();
        idx.into_iter()
            .map(|i| ds.samples[i].clone())
            .collect::<Vec<_>>()
    };
    let train_samples = pick(train_idx);
    let test_samples = pick(test_idx);
    let norm = Normalization::fit(&train_samples)?;
    Ok((
        Dataset {
            samples: train_samples,
            seed: ds.seed,
            normalization: Some(norm.clone()),
        },
        Dataset {
            samples: test_samples,
            seed: ds.seed,
            normalization: Some(norm),
        },
    ))
}

/// Pearson correlation coefficient of two equal-length series.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

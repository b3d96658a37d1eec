//! Priced non-cooperative power-control game over a shared interference
//! channel, with the rate dimension as the single resource.
//!
//! Service `l` transmits at power `p_l`, sees
//! `SINR_l = g_ll·p_l / (σ² + Σ_{k≠l} g_lk·p_k)`, earns rate
//! `a_l = B·log2(1 + SINR_l)` and pays `λ·p_l`, so its utility is
//! `u_l = w_l·a_l − λ·p_l`.

mod channel;
mod equilibrium;
mod pricing;

pub use channel::{interference, rates, sinr, total_rate, utilities, utility};
pub use equilibrium::{best_response, find_equilibrium, verify_nash, EquilibriumResult, NashCheck};
pub use pricing::{tune_lambda, LambdaSearch, LambdaTuning, LatticePoint};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("invalid game configuration: {0}")]
    InvalidConfig(String),
    #[error("power profile has {found} entries for {expected} services")]
    ProfileLength { expected: usize, found: usize },
    #[error("power {power} of service {service} outside [0, {p_max}]")]
    PowerOutOfRange {
        service: usize,
        power: f64,
        p_max: f64,
    },
    #[error("service index {index} out of range for {services} services")]
    IndexOutOfRange { index: usize, services: usize },
    #[error("zero price with unbounded power cap: best response is unbounded")]
    Unbounded,
    #[error("max_iter must be at least 1")]
    NoIterations,
    #[error("throughput cap must be a positive finite number, got {0}")]
    BadCap(f64),
    #[error("cap {r_hat} still violated at price {lambda} (total rate {total_rate})")]
    CapUnsatisfiable {
        r_hat: f64,
        lambda: f64,
        total_rate: f64,
    },
}

/// Square matrix of channel power gains; `gain(l, k)` is the gain from
/// transmitter `k` into receiver `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainMatrix {
    size: usize,
    data: Vec<f64>,
}

impl GainMatrix {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self, GameError> {
        let size = rows.len();
        if rows.iter().any(|r| r.len() != size) {
            return Err(GameError::InvalidConfig(
                "gain matrix must be square".into(),
            ));
        }
        Ok(Self {
            size,
            data: rows.concat(),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn gain(&self, receiver: usize, transmitter: usize) -> f64 {
        self.data[receiver * self.size + transmitter]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.size.max(1))
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// Smallest `g_ll / Σ_{k≠l} g_lk` over all rows (infinite without cross gains).
    pub fn dominance(&self) -> f64 {
        (0..self.size)
            .map(|l| {
                let cross: f64 = (0..self.size)
                    .filter(|&k| k != l)
                    .map(|k| self.gain(l, k))
                    .sum();
                self.gain(l, l) / cross
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Keeps only the rows and columns in `services`, in that order.
    pub fn select(&self, services: &[usize]) -> Self {
        let data = services
            .iter()
            .flat_map(|&l| services.iter().map(move |&k| (l, k)))
            .map(|(l, k)| self.gain(l, k))
            .collect();
        Self {
            size: services.len(),
            data,
        }
    }
}

/// Random diagonally dominant channel draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GainModel {
    /// Lower bound on `g_ll / Σ_{k≠l} g_lk`.
    pub dominance_ratio: f64,
    /// Direct gains are log-uniform over this many decades, centred on 1.
    pub direct_spread_decades: f64,
}

impl Default for GainModel {
    fn default() -> Self {
        Self {
            dominance_ratio: 10.0,
            direct_spread_decades: 2.0,
        }
    }
}

impl GainModel {
    /// Each cross gain `g_lk` is scaled by `min(g_ll, g_kk)`, so a link is
    /// never stronger as interference than either endpoint's own link, and
    /// each row's cross sum is a uniform `[0.2, 1]` fraction of `g_ll / ratio`.
    pub fn sample(&self, services: usize, seed: u64) -> GainMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = self.direct_spread_decades / 2.0;
        let direct: Vec<f64> = (0..services)
            .map(|_| {
                10f64.powf(if half > 0.0 {
                    rng.random_range(-half..=half)
                } else {
                    0.0
                })
            })
            .collect();
        let mut data = vec![0.0; services * services];
        for l in 0..services {
            let raw: Vec<f64> = (0..services).map(|_| rng.random_range(0.0..1.0)).collect();
            let cross_total: f64 = (0..services).filter(|&k| k != l).map(|k| raw[k]).sum();
            let fraction = rng.random_range(0.2..=1.0) / self.dominance_ratio;
            for k in 0..services {
                data[l * services + k] = if k == l {
                    direct[l]
                } else if cross_total > 0.0 {
                    direct[l].min(direct[k]) * fraction * raw[k] / cross_total
                } else {
                    0.0
                };
            }
        }
        GainMatrix {
            size: services,
            data,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    /// Per-service weight `w_l > 0`.
    pub weights: Vec<f64>,
    pub gains: GainMatrix,
    /// Bandwidth in MHz, so rates come out in Mbps.
    pub bandwidth: f64,
    /// Noise power σ² in W.
    pub noise_power: f64,
    /// Per-service power cap in W; may be infinite when `lambda > 0`.
    pub p_max: f64,
    /// Price per watt.
    pub lambda: f64,
    /// Convergence threshold on the Frobenius norm of successive rate vectors.
    pub epsilon: f64,
}

impl GameConfig {
    pub fn services(&self) -> usize {
        self.weights.len()
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), GameError> {
        let bad = |msg: String| Err(GameError::InvalidConfig(msg));
        let n = self.services();
        if self.gains.size() != n {
            return bad(format!(
                "{} weights but {}×{} gains",
                n,
                self.gains.size(),
                self.gains.size()
            ));
        }
        if let Some(l) = self
            .weights
            .iter()
            .position(|w| !(w.is_finite() && *w > 0.0))
        {
            return bad(format!("weight of service {l} must be positive"));
        }
        for l in 0..n {
            if !(self.gains.gain(l, l) > 0.0 && self.gains.gain(l, l).is_finite()) {
                return bad(format!("direct gain g[{l}][{l}] must be positive"));
            }
            if (0..n).any(|k| !(self.gains.gain(l, k) >= 0.0 && self.gains.gain(l, k).is_finite()))
            {
                return bad(format!("row {l} has a negative or non-finite gain"));
            }
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return bad("bandwidth must be positive".into());
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return bad("noise power must be positive".into());
        }
        if self.p_max.is_nan() || self.p_max <= 0.0 {
            return bad("power cap must be positive".into());
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("price must be non-negative".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be positive".into());
        }
        Ok(())
    }
}

/// Transmit powers in W, one per service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile(pub Vec<f64>);

impl PowerProfile {
    pub fn zeros(services: usize) -> Self {
        Self(vec![0.0; services])
    }

    pub fn uniform(services: usize, power: f64) -> Self {
        Self(vec![power; services])
    }

    /// Independent uniform draws on `[0, p_max]`.
    pub fn random(services: usize, p_max: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self(
            (0..services)
                .map(|_| rng.random_range(0.0..=p_max))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn powers(&self) -> &[f64] {
        &self.0
    }

    pub fn check(&self, cfg: &GameConfig) -> Result<(), GameError> {
        if self.len() != cfg.services() {
            return Err(GameError::ProfileLength {
                expected: cfg.services(),
                found: self.len(),
            });
        }
        if let Some((service, &power)) = self
            .0
            .iter()
            .enumerate()
            .find(|(_, p)| !(**p >= 0.0 && **p <= cfg.p_max))
        {
            return Err(GameError::PowerOutOfRange {
                service,
                power,
                p_max: cfg.p_max,
            });
        }
        Ok(())
    }
}

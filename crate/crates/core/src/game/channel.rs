use super::{GameConfig, GameError, PowerProfile};

/// `Σ_{k≠l} g_lk·p_k` at receiver `l`.
pub fn interference(l: usize, p: &PowerProfile, cfg: &GameConfig) -> f64 {
    p.powers()
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != l)
        .map(|(k, pk)| cfg.gains.gain(l, k) * pk)
        .sum()
}

pub fn sinr(p: &PowerProfile, cfg: &GameConfig) -> Vec<f64> {
    (0..p.len())
        .map(|l| cfg.gains.gain(l, l) * p.powers()[l] / (cfg.noise_power + interference(l, p, cfg)))
        .collect()
}

/// `B·log2(1 + SINR)` per service.
pub fn rates(sinr: &[f64], cfg: &GameConfig) -> Vec<f64> {
    sinr.iter().map(|s| cfg.bandwidth * s.log2_1p()).collect()
}

pub fn total_rate(p: &PowerProfile, cfg: &GameConfig) -> f64 {
    rates(&sinr(p, cfg), cfg).iter().sum()
}

/// `w_l·B·log2(1 + SINR_l) − λ·p_l`.
pub fn utility(l: usize, p: &PowerProfile, cfg: &GameConfig) -> Result<f64, GameError> {
    if l >= p.len() || l >= cfg.services() {
        return Err(GameError::IndexOutOfRange {
            index: l,
            services: cfg.services(),
        });
    }
    Ok(utility_at(l, p.powers()[l], interference(l, p, cfg), cfg))
}

pub fn utilities(p: &PowerProfile, cfg: &GameConfig) -> Vec<f64> {
    (0..p.len())
        .map(|l| utility_at(l, p.powers()[l], interference(l, p, cfg), cfg))
        .collect()
}

/// Utility of service `l` transmitting at `power` under fixed interference.
pub(crate) fn utility_at(l: usize, power: f64, interference: f64, cfg: &GameConfig) -> f64 {
    let s = cfg.gains.gain(l, l) * power / (cfg.noise_power + interference);
    cfg.weights[l] * cfg.bandwidth * s.log2_1p() - cfg.lambda * power
}

trait Log2OnePlus {
    fn log2_1p(self) -> f64;
}

impl Log2OnePlus for f64 {
    fn log2_1p(self) -> f64 {
        self.ln_1p() / std::f64::consts::LN_2
    }
}

use serde::{Deserialize, Serialize};

use super::channel::{interference, rates, sinr, utilities, utility_at};
use super::{GameConfig, GameError, PowerProfile};

/// Maximizer of service `l`'s utility with every other power held fixed.
///
/// Stationarity of the strictly concave `u_l(p_l)` gives
/// `p* = w·B/(λ·ln2) − (σ² + I_l)/g_ll`, clamped to `[0, p_max]`.
/// Entry `l` of `p` is ignored.
pub fn best_response(l: usize, p: &PowerProfile, cfg: &GameConfig) -> Result<f64, GameError> {
    if l >= cfg.services() || l >= p.len() {
        return Err(GameError::IndexOutOfRange {
            index: l,
            services: cfg.services(),
        });
    }
    best_response_at(l, interference(l, p, cfg), cfg)
}

fn best_response_at(l: usize, interference: f64, cfg: &GameConfig) -> Result<f64, GameError> {
    if cfg.lambda == 0.0 {
        return if cfg.p_max.is_finite() {
            Ok(cfg.p_max)
        } else {
            Err(GameError::Unbounded)
        };
    }
    let water = cfg.weights[l] * cfg.bandwidth / (cfg.lambda * std::f64::consts::LN_2);
    let floor = (cfg.noise_power + interference) / cfg.gains.gain(l, l);
    Ok((water - floor).clamp(0.0, cfg.p_max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub profile: PowerProfile,
    pub sinr: Vec<f64>,
    /// Rate per service in Mbps when the bandwidth is in MHz.
    pub rates: Vec<f64>,
    pub utilities: Vec<f64>,
    /// Sweeps performed.
    pub iterations: usize,
    pub converged: bool,
    /// `‖A(j) − A(j−1)‖` after sweep `j`, one entry per sweep.
    pub trace: Vec<f64>,
    /// Powers before the first sweep and after each sweep.
    pub power_trace: Vec<Vec<f64>>,
    /// Utilities before the first sweep and after each sweep.
    pub utility_trace: Vec<Vec<f64>>,
}

impl EquilibriumResult {
    pub fn total_rate(&self) -> f64 {
        self.rates.iter().sum()
    }

    pub fn total_power(&self) -> f64 {
        self.profile.powers().iter().sum()
    }
}

/// Gauss–Seidel best-response dynamics in ascending service order.
///
/// Stops once the Euclidean norm of the rate-vector change over a sweep falls
/// below `cfg.epsilon`, or after `max_iter` sweeps with `converged == false`.
pub fn find_equilibrium(
    cfg: &GameConfig,
    init: &PowerProfile,
    max_iter: usize,
) -> Result<EquilibriumResult, GameError> {
    cfg.validate()?;
    init.check(cfg)?;
    if max_iter == 0 {
        return Err(GameError::NoIterations);
    }
    if cfg.lambda == 0.0 && !cfg.p_max.is_finite() && cfg.services() > 0 {
        return Err(GameError::Unbounded);
    }
    let mut p = init.clone();
    let mut previous = rates(&sinr(&p, cfg), cfg);
    let mut trace = Vec::new();
    let mut power_trace = vec![p.0.clone()];
    let mut utility_trace = vec![utilities(&p, cfg)];
    let mut converged = false;

    for _ in 0..max_iter {
        for l in 0..cfg.services() {
            p.0[l] = best_response_at(l, interference(l, &p, cfg), cfg)?;
        }
        let current = rates(&sinr(&p, cfg), cfg);
        let diff = current
            .iter()
            .zip(&previous)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        trace.push(diff);
        power_trace.push(p.0.clone());
        utility_trace.push(utilities(&p, cfg));
        previous = current;
        if diff < cfg.epsilon {
            converged = true;
            break;
        }
    }

    let s = sinr(&p, cfg);
    Ok(EquilibriumResult {
        rates: rates(&s, cfg),
        utilities: utilities(&p, cfg),
        sinr: s,
        iterations: trace.len(),
        converged,
        trace,
        power_trace,
        utility_trace,
        profile: p,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashCheck {
    pub verified: bool,
    /// Largest utility gain any service finds by deviating on the grid.
    pub worst_gain: f64,
    pub worst_service: Option<usize>,
    /// Grid power at which the worst gain was found.
    pub worst_power: Option<f64>,
}

/// Grid search over unilateral deviations `p_l' ∈ [0, p_max]` for every service.
pub fn verify_nash(
    profile: &PowerProfile,
    cfg: &GameConfig,
    grid_points: usize,
    tol: f64,
) -> Result<NashCheck, GameError> {
    cfg.validate()?;
    profile.check(cfg)?;
    if !cfg.p_max.is_finite() {
        return Err(GameError::InvalidConfig(
            "deviation grid needs a finite power cap".into(),
        ));
    }
    if grid_points < 2 {
        return Err(GameError::InvalidConfig(
            "deviation grid needs at least two points".into(),
        ));
    }
    let mut check = NashCheck {
        verified: true,
        worst_gain: f64::NEG_INFINITY,
        worst_service: None,
        worst_power: None,
    };
    let step = cfg.p_max / (grid_points - 1) as f64;
    for l in 0..cfg.services() {
        let i = interference(l, profile, cfg);
        let current = utility_at(l, profile.powers()[l], i, cfg);
        for g in 0..grid_points {
            let power = g as f64 * step;
            let gain = utility_at(l, power, i, cfg) - current;
            if gain > check.worst_gain {
                check.worst_gain = gain;
                check.worst_service = Some(l);
                check.worst_power = Some(power);
            }
        }
    }
    if cfg.services() == 0 {
        check.worst_gain = 0.0;
    }
    check.verified = check.worst_gain < tol;
    if check.verified {
        check.worst_service = None;
        check.worst_power = None;
    }
    Ok(check)
}

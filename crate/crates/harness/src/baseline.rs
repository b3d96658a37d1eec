use harshnet_core::game::{rates, sinr, GameConfig, PowerProfile};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineOutcome {
    pub profile: PowerProfile,
    pub sinr: Vec<f64>,
    pub rates: Vec<f64>,
    /// Admitted services in admission order.
    pub admitted: Vec<usize>,
    /// Rejected services in ascending index order.
    pub rejected: Vec<usize>,
}

impl BaselineOutcome {
    pub fn total_rate(&self) -> f64 {
        self.rates.iter().sum()
    }
}

/// Fixed-power admission: services enter in descending weight (then
/// ascending index) order, each transmitting at `p_static`, until admitting
/// the next one would push the recomputed total rate above `r_hat`.
pub fn static_baseline(
    cfg: &GameConfig,
    p_static: f64,
    r_hat: f64,
) -> Result<BaselineOutcome, HarnessError> {
    if !(p_static > 0.0 && p_static <= cfg.p_max) {
        return Err(HarnessError::Validation(format!(
            "p_static {p_static} outside (0, {}]",
            cfg.p_max
        )));
    }
    cfg.validate()?;
    let n = cfg.services();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cfg.weights[b].total_cmp(&cfg.weights[a]).then(a.cmp(&b)));

    let mut profile = PowerProfile::zeros(n);
    let mut admitted = Vec::new();
    for l in order {
        profile.0[l] = p_static;
        let total: f64 = rates(&sinr(&profile, cfg), cfg).iter().sum();
        if total > r_hat {
            profile.0[l] = 0.0;
            break;
        }
        admitted.push(l);
    }
    let rejected = (0..n).filter(|l| !admitted.contains(l)).collect();
    let s = sinr(&profile, cfg);
    Ok(BaselineOutcome {
        rates: rates(&s, cfg),
        sinr: s,
        profile,
        admitted,
        rejected,
    })
}

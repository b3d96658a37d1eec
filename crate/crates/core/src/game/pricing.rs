use serde::{Deserialize, Serialize};

use super::equilibrium::{find_equilibrium, EquilibriumResult};
use super::{GameConfig, GameError, PowerProfile, DEFAULT_MAX_ITER};

/// Bracketing and bisection settings for the price search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LambdaSearch {
    pub lambda_lo: f64,
    /// First upper bracket; doubled while the cap is still violated.
    pub lambda_hi_start: f64,
    pub lambda_hi_max: f64,
    pub bisection_steps: usize,
    /// Sweep budget for each equilibrium solve.
    pub max_iter: usize,
}

impl Default for LambdaSearch {
    fn default() -> Self {
        Self {
            lambda_lo: 1e-6,
            lambda_hi_start: 1.0,
            lambda_hi_max: 2f64.powi(60),
            bisection_steps: 60,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticePoint {
    pub lambda: f64,
    pub total_rate: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaTuning {
    pub lambda: f64,
    pub equilibrium: EquilibriumResult,
    /// True when the cap is violated at `lambda_lo`.
    pub binding: bool,
    /// Every price evaluated, in evaluation order.
    pub lattice: Vec<LatticePoint>,
}

impl LambdaTuning {
    /// `(r_hat − Σa) / r_hat`.
    pub fn relative_slack(&self, r_hat: f64) -> f64 {
        (r_hat - self.equilibrium.total_rate()) / r_hat
    }

    pub fn sorted_lattice(&self) -> Vec<LatticePoint> {
        let mut points = self.lattice.clone();
        points.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        points
    }
}

/// Smallest price on the search lattice whose equilibrium keeps the total
/// rate within `r_hat`.
///
/// The equilibrium total rate falls as the price rises, so the upper bracket
/// is doubled until the cap holds and the bracket is then bisected at its
/// geometric midpoint. `cfg.lambda` is ignored.
pub fn tune_lambda(
    cfg: &GameConfig,
    r_hat: f64,
    init: &PowerProfile,
    search: &LambdaSearch,
) -> Result<LambdaTuning, GameError> {
    if !(r_hat > 0.0 && r_hat.is_finite()) {
        return Err(GameError::BadCap(r_hat));
    }
    if !(search.lambda_lo > 0.0 && search.lambda_hi_max >= search.lambda_lo) {
        return Err(GameError::InvalidConfig(
            "price search bounds are inverted".into(),
        ));
    }
    let mut lattice = Vec::new();
    let mut solve = |lambda: f64| -> Result<EquilibriumResult, GameError> {
        let r = find_equilibrium(&cfg.with_lambda(lambda), init, search.max_iter)?;
        lattice.push(LatticePoint {
            lambda,
            total_rate: r.total_rate(),
            converged: r.converged,
        });
        Ok(r)
    };

    let mut lo = search.lambda_lo;
    let at_lo = solve(lo)?;
    if at_lo.total_rate() <= r_hat {
        return Ok(LambdaTuning {
            lambda: lo,
            equilibrium: at_lo,
            binding: false,
            lattice,
        });
    }

    let mut hi = search.lambda_hi_start.max(lo);
    let mut at_hi = solve(hi)?;
    while at_hi.total_rate() > r_hat {
        if hi >= search.lambda_hi_max {
            return Err(GameError::CapUnsatisfiable {
                r_hat,
                lambda: hi,
                total_rate: at_hi.total_rate(),
            });
        }
        lo = hi;
        hi = (hi * 2.0).min(search.lambda_hi_max);
        at_hi = solve(hi)?;
    }

    for _ in 0..search.bisection_steps {
        let mid = (lo * hi).sqrt();
        if !(mid > lo && mid < hi) {
            break;
        }
        let at_mid = solve(mid)?;
        if at_mid.total_rate() <= r_hat {
            hi = mid;
            at_hi = at_mid;
        } else {
            lo = mid;
        }
    }

    Ok(LambdaTuning {
        lambda: hi,
        equilibrium: at_hi,
        binding: true,
        lattice,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{GainModel, PowerProfile};

    fn cfg(seed: u64) -> GameConfig {
        GameConfig {
            weights: vec![0.25, 0.2, 0.18, 0.15, 0.12, 0.1],
            gains: GainModel::default().sample(6, seed),
            bandwidth: 20.0,
            noise_power: 1.0,
            p_max: 1.0,
            lambda: 0.0,
            epsilon: 1e-6,
        }
    }

    #[test]
    fn loose_cap_keeps_floor_price() {
        let c = cfg(1);
        let t = tune_lambda(&c, 1e6, &PowerProfile::zeros(6), &LambdaSearch::default()).unwrap();
        assert_eq!(t.lambda, 1e-6);
        assert!(!t.binding);
        assert!(t.relative_slack(1e6) > 0.0);
        assert_eq!(t.lattice.len(), 1);
    }

    #[test]
    fn binding_cap_is_met_tightly() {
        let c = cfg(2);
        let init = PowerProfile::zeros(6);
        let full = tune_lambda(&c, 1e6, &init, &LambdaSearch::default()).unwrap();
        let r_hat = 0.5 * full.equilibrium.total_rate();
        let t = tune_lambda(&c, r_hat, &init, &LambdaSearch::default()).unwrap();
        assert!(t.binding);
        let slack = t.relative_slack(r_hat);
        assert!((0.0..=0.01).contains(&slack), "slack {slack}");
    }

    #[test]
    fn non_positive_cap_rejected() {
        let c = cfg(0);
        for r in [0.0, -1.0, f64::NAN] {
            assert!(matches!(
                tune_lambda(&c, r, &PowerProfile::zeros(6), &LambdaSearch::default()),
                Err(GameError::BadCap(_))
            ));
        }
    }

    #[test]
    fn capped_bracket_reports_unsatisfiable() {
        let c = cfg(0);
        let search = LambdaSearch {
            lambda_hi_max: 2.0,
            ..LambdaSearch::default()
        };
        let err = tune_lambda(&c, 1e-3, &PowerProfile::zeros(6), &search).unwrap_err();
        assert!(matches!(err, GameError::CapUnsatisfiable { .. }));
    }
}

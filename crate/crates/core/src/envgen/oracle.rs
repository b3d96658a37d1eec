//! Analytic ground-truth throughput for a synthetic environment.
//!
//! `r = B_ref · log2(1 + P_ref / (N_0 + κ·mean(emi))) · d_T(temperature) · d_H(humidity)`
//!
//! with `d_T(t) = 1 / (1 + s_T·max(0, t − t_knee))` and
//! `d_H(h) = 1 − s_H·max(0, h − h_knee)`.

use serde::{Deserialize, Serialize};

use super::{EMI_POSITIONS, FEATURES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConstants {
    /// Reference bandwidth in MHz; the label comes out in Mbps.
    pub bandwidth_mhz: f64,
    pub signal_power: f64,
    pub noise_floor: f64,
    /// Coupling from mean radiation density to added noise.
    pub emi_coupling: f64,
    pub temperature_knee_c: f64,
    pub temperature_slope: f64,
    pub humidity_knee_pct: f64,
    pub humidity_slope: f64,
}

impl Default for OracleConstants {
    fn default() -> Self {
        Self {
            bandwidth_mhz: 20.0,
            signal_power: 31.0,
            noise_floor: 1.0,
            emi_coupling: 1.0,
            temperature_knee_c: 35.0,
            temperature_slope: 0.03,
            humidity_knee_pct: 60.0,
            humidity_slope: 0.004,
        }
    }
}

impl OracleConstants {
    /// Throughput with no interference at benign temperature and humidity.
    pub fn ceiling(&self) -> f64 {
        self.bandwidth_mhz * (1.0 + self.signal_power / self.noise_floor).log2()
    }

    pub fn temperature_factor(&self, celsius: f64) -> f64 {
        1.0 / (1.0 + self.temperature_slope * (celsius - self.temperature_knee_c).max(0.0))
    }

    pub fn humidity_factor(&self, percent: f64) -> f64 {
        1.0 - self.humidity_slope * (percent - self.humidity_knee_pct).max(0.0)
    }

    /// Noise-free throughput in Mbps for an `emi[30] ++ [temperature, humidity]` vector.
    pub fn throughput(&self, features: &[f64; FEATURES]) -> f64 {
        let emi = &features[..EMI_POSITIONS];
        let mean_emi = emi.iter().sum::<f64>() / EMI_POSITIONS as f64;
        let sinr = self.signal_power / (self.noise_floor + self.emi_coupling * mean_emi);
        let rate = self.bandwidth_mhz * (1.0 + sinr).log2();
        rate * self.temperature_factor(features[EMI_POSITIONS])
            * self.humidity_factor(features[EMI_POSITIONS + 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn features(emi: f64, t: f64, h: f64) -> [f64; FEATURES] {
        let mut f = [emi; FEATURES];
        f[EMI_POSITIONS] = t;
        f[EMI_POSITIONS + 1] = h;
        f
    }

    #[test]
    fn clean_air_hits_ceiling() {
        let c = OracleConstants::default();
        let r = c.throughput(&features(0.0, 20.0, 40.0));
        assert_eq!(r, c.ceiling());
        assert_eq!(c.ceiling(), 100.0);
    }

    #[test]
    fn doubling_emi_lowers_throughput() {
        let c = OracleConstants::default();
        for base in [0.01, 0.5, 3.0, 40.0] {
            let lo = c.throughput(&features(base, 30.0, 70.0));
            let hi = c.throughput(&features(2.0 * base, 30.0, 70.0));
            assert!(hi < lo);
        }
    }

    #[test]
    fn single_position_increase_is_strict() {
        let c = OracleConstants::default();
        let f = features(2.0, 25.0, 50.0);
        let before = c.throughput(&f);
        for j in 0..EMI_POSITIONS {
            let mut g = f;
            g[j] += 0.5;
            assert!(c.throughput(&g) < before, "position {j}");
        }
    }

    #[test]
    fn heat_and_damp_degrade_only_past_knee() {
        let c = OracleConstants::default();
        let at = |t, h| c.throughput(&features(1.0, t, h));
        assert_eq!(at(10.0, 40.0), at(35.0, 60.0));
        assert!(at(36.0, 40.0) < at(35.0, 40.0));
        assert!(at(40.0, 40.0) < at(36.0, 40.0));
        assert!(at(20.0, 61.0) < at(20.0, 60.0));
        assert!(at(20.0, 100.0) < at(20.0, 80.0));
        assert!(at(45.0, 100.0) > 0.0);
    }
}

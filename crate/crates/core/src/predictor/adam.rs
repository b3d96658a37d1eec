use serde::{Deserialize, Serialize};

use super::network::NetworkParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 4e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first_moment: NetworkParams,
    pub second_moment: NetworkParams,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &NetworkParams, config: AdamConfig) -> Self {
        Self {
            config,
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
            step: 0,
        }
    }

    /// One bias-corrected Adam update of `params` along `grad`.
    pub fn update(&mut self, params: &mut NetworkParams, grad: &NetworkParams) {
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        let grads = grad.named_tensors();
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(self.first_moment.tensors_mut())
            .zip(self.second_moment.tensors_mut())
            .zip(grads);
        for (((p, m), v), (_, g)) in tensors {
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::{xavier_init, Architecture};

    #[test]
    fn first_step_moves_each_parameter_by_learning_rate() {
        let arch = Architecture {
            channels: vec![2],
            ..Architecture::standard()
        };
        let mut params = xavier_init(&arch, 1).unwrap();
        let before = params.clone();
        let mut grad = params.zeros_like();
        grad.fc_bias = 3.0;
        grad.fc_weight[0] = -0.5;
        let mut adam = AdamState::new(&params, AdamConfig::default());
        adam.update(&mut params, &grad);
        // With bias correction the first step is lr * g / (|g| + eps).
        assert!((before.fc_bias - params.fc_bias - 4e-4).abs() < 1e-10);
        assert!((params.fc_weight[0] - before.fc_weight[0] - 4e-4).abs() < 1e-10);
        assert_eq!(params.fc_weight[1], before.fc_weight[1]);
        assert_eq!(adam.step, 1);
    }
}

//! Analytic gradients against central finite differences.

use harshnet_core::predictor::{backward, forward, xavier_init, Architecture, NetworkParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;
const MAX_REL_ERROR: f64 = 1e-4;
/// Denominator floor: below this both gradients count as zero.
const GRAD_FLOOR: f64 = 1e-6;

fn loss(params: &NetworkParams, x: &[f64], target: f64) -> f64 {
    let (y, _) = forward(params, x).unwrap();
    (y - target).powi(2)
}

fn numeric(params: &NetworkParams, tensor: usize, index: usize, x: &[f64], target: f64) -> f64 {
    let mut plus = params.clone();
    plus.tensors_mut()[tensor][index] += STEP;
    let mut minus = params.clone();
    minus.tensors_mut()[tensor][index] -= STEP;
    (loss(&plus, x, target) - loss(&minus, x, target)) / (2.0 * STEP)
}

fn rel_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(GRAD_FLOOR)
}

fn tiny() -> Architecture {
    Architecture {
        input_len: 32,
        kernels: vec![1, 3, 5],
        channels: vec![4, 4, 3, 3, 2],
        pool: 4,
        fusion_channels: 3,
    }
}

fn instance(arch: &Architecture, seed: u64) -> (NetworkParams, Vec<f64>, f64) {
    let mut params = xavier_init(arch, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    // Non-zero biases so every bias gradient is exercised.
    for t in params.tensors_mut() {
        if t.len() <= 64 {
            t.iter_mut().for_each(|b| *b += rng.random_range(-0.1..0.1));
        }
    }
    let x: Vec<f64> = (0..arch.input_len)
        .map(|_| rng.random_range(-2.0..2.0))
        .collect();
    (params, x, rng.random_range(-1.0..1.0))
}

#[test]
fn every_parameter_of_tiny_networks() {
    for seed in 0..10 {
        let (params, x, target) = instance(&tiny(), seed);
        let (_, cache) = forward(&params, &x).unwrap();
        let grad = backward(&params, &cache, target).unwrap();
        let names = grad.named_tensors();
        let mut worst = (0.0, String::new());
        let (mut live, mut total) = (0usize, 0usize);
        for (t, (name, analytic)) in names.iter().enumerate() {
            for (i, &a) in analytic.iter().enumerate() {
                total += 1;
                live += usize::from(a.abs() > GRAD_FLOOR);
                let e = rel_error(a, numeric(&params, t, i, &x, target));
                if e > worst.0 {
                    worst = (e, format!("{name}[{i}]"));
                }
            }
        }
        assert!(
            worst.0 < MAX_REL_ERROR,
            "seed {seed}: {} at {}",
            worst.0,
            worst.1
        );
        // Guard against a vacuous pass through dead units.
        assert!(
            2 * live > total,
            "seed {seed}: only {live}/{total} gradients are non-zero"
        );
    }
}

#[test]
fn sampled_parameters_of_standard_network() {
    let arch = Architecture::standard();
    let (params, x, target) = instance(&arch, 99);
    let (_, cache) = forward(&params, &x).unwrap();
    let grad = backward(&params, &cache, target).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (t, (name, analytic)) in grad.named_tensors().iter().enumerate() {
        for _ in 0..analytic.len().min(12) {
            let i = rng.random_range(0..analytic.len());
            let n = numeric(&params, t, i, &x, target);
            let e = rel_error(analytic[i], n);
            assert!(
                e < MAX_REL_ERROR,
                "{name}[{i}]: analytic {} numeric {n}",
                analytic[i]
            );
        }
    }
}

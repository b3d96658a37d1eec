//! Three-branch 1-D CNN regressor.
//!
//! ```text
//! input 32×1 ─┬─ branch k=1 ─┐
//!             ├─ branch k=3 ─┼─ concat 8×12 ─ 1×1 conv → 8×3 ─ flatten 24 ─ FC → r̂
//!             └─ branch k=5 ─┘
//! branch: 5 × (conv + ReLU) with 64, 64, 16, 16, 4 kernels, then 4×1 max pool → 8×4
//! ```
//!
//! The fusion convolution is linear; only the branch convolutions carry a ReLU.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{max_pool, max_pool_backward, xavier_bound, Conv1d, Tensor1D};
use super::PredictorError;

/// Layer sizes. [`Architecture::standard`] is the reference network; smaller
/// instances exist for exhaustive gradient checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_len: usize,
    /// One branch per kernel size; all must be odd.
    pub kernels: Vec<usize>,
    /// Output channels of each convolution inside a branch.
    pub channels: Vec<usize>,
    pub pool: usize,
    pub fusion_channels: usize,
}

impl Architecture {
    pub fn standard() -> Self {
        Self {
            input_len: 32,
            kernels: vec![1, 3, 5],
            channels: vec![64, 64, 16, 16, 4],
            pool: 4,
            fusion_channels: 3,
        }
    }

    pub fn validate(&self) -> Result<(), PredictorError> {
        let bad = |why: String| Err(PredictorError::Architecture(why));
        if self.kernels.is_empty() || self.channels.is_empty() {
            return bad("need at least one branch and one convolution".into());
        }
        if let Some(k) = self.kernels.iter().find(|k| **k % 2 == 0) {
            return bad(format!(
                "kernel size {k} is even; padding (k-1)/2 would not preserve length"
            ));
        }
        if self.pool == 0 || self.input_len == 0 || !self.input_len.is_multiple_of(self.pool) {
            return bad(format!(
                "pool {} does not divide input length {}",
                self.pool, self.input_len
            ));
        }
        if self.channels.contains(&0) || self.fusion_channels == 0 {
            return bad("zero-width layer".into());
        }
        Ok(())
    }

    pub fn pooled_len(&self) -> usize {
        self.input_len / self.pool
    }

    pub fn branch_out_channels(&self) -> usize {
        *self.channels.last().expect("validated")
    }

    pub fn concat_channels(&self) -> usize {
        self.kernels.len() * self.branch_out_channels()
    }

    pub fn fc_inputs(&self) -> usize {
        self.pooled_len() * self.fusion_channels
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub architecture: Architecture,
    /// `branches[b][i]` is convolution `i` of branch `b`.
    pub branches: Vec<Vec<Conv1d>>,
    pub fusion: Conv1d,
    pub fc_weight: Vec<f64>,
    pub fc_bias: f64,
}

impl NetworkParams {
    pub fn zeros(arch: &Architecture) -> Result<Self, PredictorError> {
        arch.validate()?;
        let branches = arch
            .kernels
            .iter()
            .map(|&k| {
                let mut cin = 1;
                arch.channels
                    .iter()
                    .map(|&cout| {
                        let layer = Conv1d::zeros(k, cin, cout);
                        cin = cout;
                        layer
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            architecture: arch.clone(),
            branches,
            fusion: Conv1d::zeros(1, arch.concat_channels(), arch.fusion_channels),
            fc_weight: vec![0.0; arch.fc_inputs()],
            fc_bias: 0.0,
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.architecture).expect("architecture already validated")
    }

    /// Every weight and bias tensor with a stable dotted name, in the order
    /// used by the optimizer and model files.
    pub fn named_tensors(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::new();
        for (b, branch) in self.branches.iter().enumerate() {
            for (i, conv) in branch.iter().enumerate() {
                out.push((format!("branch{b}.conv{i}.weight"), conv.weight.as_slice()));
                out.push((format!("branch{b}.conv{i}.bias"), conv.bias.as_slice()));
            }
        }
        out.push(("fusion.weight".into(), self.fusion.weight.as_slice()));
        out.push(("fusion.bias".into(), self.fusion.bias.as_slice()));
        out.push(("fc.weight".into(), self.fc_weight.as_slice()));
        out.push(("fc.bias".into(), std::slice::from_ref(&self.fc_bias)));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for branch in &mut self.branches {
            for conv in branch {
                out.push(conv.weight.as_mut_slice());
                out.push(conv.bias.as_mut_slice());
            }
        }
        out.push(self.fusion.weight.as_mut_slice());
        out.push(self.fusion.bias.as_mut_slice());
        out.push(self.fc_weight.as_mut_slice());
        out.push(std::slice::from_mut(&mut self.fc_bias));
        out
    }

    /// Declared shape of each tensor in [`Self::named_tensors`] order:
    /// `[kernel, in, out]` for convolution weights.
    pub fn tensor_shapes(&self) -> Vec<Vec<usize>> {
        let conv_shapes = |c: &Conv1d| {
            [
                vec![c.kernel, c.in_channels, c.out_channels],
                vec![c.out_channels],
            ]
        };
        let mut out = Vec::new();
        for conv in self.branches.iter().flatten() {
            out.extend(conv_shapes(conv));
        }
        out.extend(conv_shapes(&self.fusion));
        out.push(vec![self.fc_weight.len()]);
        out.push(vec![1]);
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.named_tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.named_tensors()
            .iter()
            .all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &Self, scale: f64) {
        let src = other.named_tensors();
        for (dst, (_, src)) in self.tensors_mut().into_iter().zip(src) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }
}

/// Glorot-uniform weights and zero biases for every layer.
pub fn xavier_init(arch: &Architecture, seed: u64) -> Result<NetworkParams, PredictorError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    xavier_init_with(arch, &mut rng)
}

pub(crate) fn xavier_init_with(
    arch: &Architecture,
    rng: &mut ChaCha8Rng,
) -> Result<NetworkParams, PredictorError> {
    let mut params = NetworkParams::zeros(arch)?;
    for conv in params.branches.iter_mut().flatten() {
        *conv = Conv1d::xavier(conv.kernel, conv.in_channels, conv.out_channels, rng);
    }
    params.fusion = Conv1d::xavier(1, arch.concat_channels(), arch.fusion_channels, rng);
    let bound = xavier_bound(arch.fc_inputs(), 1);
    for w in &mut params.fc_weight {
        *w = rand::Rng::random_range(rng, -bound..=bound);
    }
    Ok(params)
}

/// Intermediate activations retained for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    architecture: Architecture,
    /// Per branch: the input followed by each post-ReLU convolution output.
    branch_activations: Vec<Vec<Tensor1D>>,
    pool_argmax: Vec<Vec<usize>>,
    pooled: Vec<Tensor1D>,
    concat: Tensor1D,
    fused: Tensor1D,
    output: f64,
}

impl ForwardCache {
    pub fn output(&self) -> f64 {
        self.output
    }

    /// `(length, channels)` after each convolution of each branch, then after pooling.
    pub fn branch_shapes(&self) -> Vec<Vec<(usize, usize)>> {
        self.branch_activations
            .iter()
            .zip(&self.pooled)
            .map(|(acts, pooled)| {
                acts.iter()
                    .skip(1)
                    .map(Tensor1D::shape)
                    .chain(std::iter::once(pooled.shape()))
                    .collect()
            })
            .collect()
    }

    pub fn concat_shape(&self) -> (usize, usize) {
        self.concat.shape()
    }

    pub fn fused_shape(&self) -> (usize, usize) {
        self.fused.shape()
    }

    /// Length of the vector fed to the fully connected layer.
    pub fn fc_input_len(&self) -> usize {
        self.fused.values.len()
    }
}

pub fn forward(
    params: &NetworkParams,
    input: &[f64],
) -> Result<(f64, ForwardCache), PredictorError> {
    let arch = &params.architecture;
    if input.len() != arch.input_len {
        return Err(PredictorError::InputLength {
            expected: arch.input_len,
            found: input.len(),
        });
    }
    let x = Tensor1D::from_signal(input);
    let mut branch_activations = Vec::with_capacity(params.branches.len());
    let mut pool_argmax = Vec::with_capacity(params.branches.len());
    let mut pooled = Vec::with_capacity(params.branches.len());
    for branch in &params.branches {
        let mut acts = Vec::with_capacity(branch.len() + 1);
        acts.push(x.clone());
        for conv in branch {
            let y = conv.forward(acts.last().expect("non-empty"), true);
            assert_eq!(
                y.length, arch.input_len,
                "convolution changed the signal length"
            );
            acts.push(y);
        }
        let (p, idx) = max_pool(acts.last().expect("non-empty"), arch.pool);
        assert_eq!(p.length, arch.pooled_len(), "pool output length");
        branch_activations.push(acts);
        pool_argmax.push(idx);
        pooled.push(p);
    }

    let per_branch = arch.branch_out_channels();
    let mut concat = Tensor1D::zeros(arch.pooled_len(), arch.concat_channels());
    for t in 0..arch.pooled_len() {
        for (b, p) in pooled.iter().enumerate() {
            let dst = t * concat.channels + b * per_branch;
            concat.values[dst..dst + per_branch].copy_from_slice(p.at(t));
        }
    }
    let fused = params.fusion.forward(&concat, false);
    let output = params.fc_bias
        + params
            .fc_weight
            .iter()
            .zip(&fused.values)
            .map(|(w, v)| w * v)
            .sum::<f64>();

    let cache = ForwardCache {
        architecture: arch.clone(),
        branch_activations,
        pool_argmax,
        pooled,
        concat,
        fused,
        output,
    };
    Ok((output, cache))
}

/// Exact gradient of `(r̂ − target)²` with respect to every parameter.
pub fn backward(
    params: &NetworkParams,
    cache: &ForwardCache,
    target: f64,
) -> Result<NetworkParams, PredictorError> {
    let mut grad = params.zeros_like();
    accumulate_gradient(params, cache, 2.0 * (cache.output - target), &mut grad)?;
    Ok(grad)
}

/// Adds `d_output * ∂r̂/∂θ` into `grad`.
pub(crate) fn accumulate_gradient(
    params: &NetworkParams,
    cache: &ForwardCache,
    d_output: f64,
    grad: &mut NetworkParams,
) -> Result<(), PredictorError> {
    if cache.architecture != params.architecture || grad.architecture != params.architecture {
        return Err(PredictorError::CacheMismatch);
    }
    let arch = &params.architecture;
    if d_output == 0.0 {
        return Ok(());
    }

    grad.fc_bias += d_output;
    let mut d_fused = Tensor1D::zeros(cache.fused.length, cache.fused.channels);
    for ((gw, dv), (&v, &w)) in grad
        .fc_weight
        .iter_mut()
        .zip(d_fused.values.iter_mut())
        .zip(cache.fused.values.iter().zip(&params.fc_weight))
    {
        *gw += d_output * v;
        *dv = d_output * w;
    }

    let d_concat = params
        .fusion
        .backward(&cache.concat, &d_fused, &mut grad.fusion, true)
        .expect("input gradient requested");

    let per_branch = arch.branch_out_channels();
    for (b, branch) in params.branches.iter().enumerate() {
        let mut d_pooled = Tensor1D::zeros(arch.pooled_len(), per_branch);
        for t in 0..arch.pooled_len() {
            let src = t * d_concat.channels + b * per_branch;
            d_pooled.values[t * per_branch..(t + 1) * per_branch]
                .copy_from_slice(&d_concat.values[src..src + per_branch]);
        }
        let acts = &cache.branch_activations[b];
        let mut dy = max_pool_backward(&d_pooled, &cache.pool_argmax[b], arch.input_len);
        for (i, conv) in branch.iter().enumerate().rev() {
            let out = &acts[i + 1];
            for (g, &y) in dy.values.iter_mut().zip(&out.values) {
                if y <= 0.0 {
                    *g = 0.0;
                }
            }
            match conv.backward(&acts[i], &dy, &mut grad.branches[b][i], i > 0) {
                Some(dx) => dy = dx,
                None => break,
            }
        }
    }
    Ok(())
}

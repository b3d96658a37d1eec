//! Length-preserving 1-D convolution and non-overlapping max pooling over
//! channels-last tensors.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// `length × channels` values, position-major (`values[t * channels + c]`).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor1D {
    pub length: usize,
    pub channels: usize,
    pub values: Vec<f64>,
}

impl Tensor1D {
    pub fn zeros(length: usize, channels: usize) -> Self {
        Self {
            length,
            channels,
            values: vec![0.0; length * channels],
        }
    }

    pub fn from_signal(signal: &[f64]) -> Self {
        Self {
            length: signal.len(),
            channels: 1,
            values: signal.to_vec(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.length, self.channels)
    }

    pub fn at(&self, t: usize) -> &[f64] {
        &self.values[t * self.channels..(t + 1) * self.channels]
    }
}

/// Convolution with stride 1 and padding `(kernel − 1) / 2`.
///
/// Weights are stored tap-major as `[kernel][in][out]` so the innermost
/// loops run contiguously over output channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv1d {
    pub kernel: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv1d {
    pub fn zeros(kernel: usize, in_channels: usize, out_channels: usize) -> Self {
        Self {
            kernel,
            in_channels,
            out_channels,
            weight: vec![0.0; kernel * in_channels * out_channels],
            bias: vec![0.0; out_channels],
        }
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn xavier(
        kernel: usize,
        in_channels: usize,
        out_channels: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let bound = xavier_bound(kernel * in_channels, kernel * out_channels);
        let mut layer = Self::zeros(kernel, in_channels, out_channels);
        for w in &mut layer.weight {
            *w = rng.random_range(-bound..=bound);
        }
        layer
    }

    pub fn padding(&self) -> usize {
        (self.kernel - 1) / 2
    }

    pub fn forward(&self, x: &Tensor1D, relu: bool) -> Tensor1D {
        debug_assert_eq!(x.channels, self.in_channels);
        let (cin, cout, pad) = (self.in_channels, self.out_channels, self.padding());
        let len = x.length;
        let mut y = Tensor1D::zeros(len, cout);
        for t in 0..len {
            let out = &mut y.values[t * cout..(t + 1) * cout];
            out.copy_from_slice(&self.bias);
            for j in 0..self.kernel {
                let Some(src) = (t + j).checked_sub(pad).filter(|s| *s < len) else {
                    continue;
                };
                let xs = x.at(src);
                let taps = &self.weight[j * cin * cout..(j + 1) * cin * cout];
                for (c, &xv) in xs.iter().enumerate() {
                    if xv == 0.0 {
                        continue;
                    }
                    let w = &taps[c * cout..(c + 1) * cout];
                    for (o, wv) in out.iter_mut().zip(w) {
                        *o += xv * wv;
                    }
                }
            }
            if relu {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
        y
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx` when
    /// `want_input_grad` is set. `dy` must already include the activation mask.
    pub fn backward(
        &self,
        x: &Tensor1D,
        dy: &Tensor1D,
        grad: &mut Conv1d,
        want_input_grad: bool,
    ) -> Option<Tensor1D> {
        let (cin, cout, pad) = (self.in_channels, self.out_channels, self.padding());
        let len = x.length;
        let mut dx = want_input_grad.then(|| Tensor1D::zeros(len, cin));
        for t in 0..len {
            let g = dy.at(t);
            if g.iter().all(|v| *v == 0.0) {
                continue;
            }
            for (b, gv) in grad.bias.iter_mut().zip(g) {
                *b += gv;
            }
            for j in 0..self.kernel {
                let Some(src) = (t + j).checked_sub(pad).filter(|s| *s < len) else {
                    continue;
                };
                let base = j * cin * cout;
                for c in 0..cin {
                    let off = base + c * cout;
                    let xv = x.values[src * cin + c];
                    if xv != 0.0 {
                        let gw = &mut grad.weight[off..off + cout];
                        for (w, gv) in gw.iter_mut().zip(g) {
                            *w += xv * gv;
                        }
                    }
                    if let Some(dx) = dx.as_mut() {
                        let w = &self.weight[off..off + cout];
                        dx.values[src * cin + c] +=
                            w.iter().zip(g).map(|(a, b)| a * b).sum::<f64>();
                    }
                }
            }
        }
        dx
    }
}

pub fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Non-overlapping max pool of width `size` along positions. Returns the
/// pooled tensor and, per output cell, the flat index of the winning input.
pub fn max_pool(x: &Tensor1D, size: usize) -> (Tensor1D, Vec<usize>) {
    let out_len = x.length / size;
    let ch = x.channels;
    let mut y = Tensor1D::zeros(out_len, ch);
    let mut argmax = vec![0; out_len * ch];
    for p in 0..out_len {
        for c in 0..ch {
            let mut best = p * size * ch + c;
            for t in p * size + 1..(p + 1) * size {
                let i = t * ch + c;
                if x.values[i] > x.values[best] {
                    best = i;
                }
            }
            y.values[p * ch + c] = x.values[best];
            argmax[p * ch + c] = best;
        }
    }
    (y, argmax)
}

pub fn max_pool_backward(dy: &Tensor1D, argmax: &[usize], input_len: usize) -> Tensor1D {
    let mut dx = Tensor1D::zeros(input_len, dy.channels);
    for (g, &i) in dy.values.iter().zip(argmax) {
        dx.values[i] += g;
    }
    dx
}

//! Central finite differences over every network parameter.
//!
//! A perturbed weight of convolution `i` only moves output channel `o` of
//! that layer, and ReLU keeps the change in that channel, so the next layer's
//! pre-activation can be patched from one input channel. Only the layers
//! after that are recomputed in full.
//!
//! A difference quotient is only meaningful where the loss is smooth on
//! `[θ − h, θ + h]`. Every evaluation records whether a ReLU sign or a pool
//! argmax moved away from the unperturbed pass, and the step is shrunk until
//! neither side crosses a kink.

use std::cell::Cell;

use harshnet_core::predictor::{max_pool, Conv1d, NetworkParams, Tensor1D};

/// Step reductions, by ten each, before falling back to a plain central difference.
const REFINEMENTS: usize = 6;

pub struct FdOracle<'a> {
    params: &'a NetworkParams,
    target: f64,
    /// `inputs[b][i]` feeds convolution `i` of branch `b`; the last entry is the branch output.
    inputs: Vec<Vec<Tensor1D>>,
    pre: Vec<Vec<Tensor1D>>,
    pooled: Vec<Tensor1D>,
    argmax: Vec<Vec<usize>>,
    crossed: Cell<bool>,
    refined: Cell<usize>,
}

fn relu(mut t: Tensor1D) -> Tensor1D {
    t.values.iter_mut().for_each(|v| *v = v.max(0.0));
    t
}

impl<'a> FdOracle<'a> {
    pub fn new(params: &'a NetworkParams, x: &[f64], target: f64) -> Self {
        let signal = Tensor1D::from_signal(x);
        let mut inputs = Vec::new();
        let mut pre = Vec::new();
        let mut pooled = Vec::new();
        let mut argmax = Vec::new();
        for branch in &params.branches {
            let mut ins = vec![signal.clone()];
            let mut pres = Vec::new();
            for conv in branch {
                let p = conv.forward(ins.last().unwrap(), false);
                ins.push(relu(p.clone()));
                pres.push(p);
            }
            let (p, idx) = max_pool(ins.last().unwrap(), params.architecture.pool);
            pooled.push(p);
            argmax.push(idx);
            inputs.push(ins);
            pre.push(pres);
        }
        Self {
            params,
            target,
            inputs,
            pre,
            pooled,
            argmax,
            crossed: Cell::new(false),
            refined: Cell::new(0),
        }
    }

    /// Parameters whose step had to be shrunk in the last [`gradient`](Self::gradient) call.
    pub fn refined(&self) -> usize {
        self.refined.get()
    }

    /// ReLU of a perturbed pre-activation of convolution `layer` in branch `b`.
    fn activate(&self, b: usize, layer: usize, pre: Tensor1D) -> Tensor1D {
        let cached = &self.pre[b][layer];
        if pre
            .values
            .iter()
            .zip(&cached.values)
            .any(|(p, c)| (*p > 0.0) != (*c > 0.0))
        {
            self.crossed.set(true);
        }
        relu(pre)
    }

    fn head(&self, pooled: &[Tensor1D], fusion: &Conv1d, fc_weight: &[f64], fc_bias: f64) -> f64 {
        let len = pooled[0].length;
        let per = pooled[0].channels;
        let mut concat = Tensor1D::zeros(len, per * pooled.len());
        for t in 0..len {
            for (b, p) in pooled.iter().enumerate() {
                for c in 0..per {
                    concat.values[t * concat.channels + b * per + c] = p.at(t)[c];
                }
            }
        }
        let fused = fusion.forward(&concat, false);
        let y = fc_bias
            + fc_weight
                .iter()
                .zip(&fused.values)
                .map(|(w, v)| w * v)
                .sum::<f64>();
        (y - self.target).powi(2)
    }

    fn loss_with_branch_output(&self, b: usize, out: &Tensor1D) -> f64 {
        let mut pooled = self.pooled.clone();
        let (p, idx) = max_pool(out, self.params.architecture.pool);
        // A tie broken the other way is still a kink of the loss.
        let out_pool = &self.pooled[b];
        let tied = idx
            .iter()
            .zip(&self.argmax[b])
            .enumerate()
            .any(|(i, (a, c))| a != c && out_pool.values[i] > 0.0);
        if tied {
            self.crossed.set(true);
        }
        pooled[b] = p;
        self.head(
            &pooled,
            &self.params.fusion,
            &self.params.fc_weight,
            self.params.fc_bias,
        )
    }

    /// Continues branch `b` from layer `layer`, whose input differs from the
    /// cached one only in channel `channel`.
    fn resume(&self, b: usize, layer: usize, x: Tensor1D, channel: usize) -> f64 {
        let branch = &self.params.branches[b];
        if layer == branch.len() {
            return self.loss_with_branch_output(b, &x);
        }
        let conv = &branch[layer];
        let cached = &self.inputs[b][layer];
        let (cin, cout, pad, len) = (
            conv.in_channels,
            conv.out_channels,
            conv.padding(),
            x.length,
        );
        let mut pre = self.pre[b][layer].clone();
        for t in 0..len {
            for j in 0..conv.kernel {
                let Some(src) = (t + j).checked_sub(pad).filter(|s| *s < len) else {
                    continue;
                };
                let d = x.values[src * cin + channel] - cached.values[src * cin + channel];
                if d == 0.0 {
                    continue;
                }
                let w = &conv.weight[(j * cin + channel) * cout..(j * cin + channel + 1) * cout];
                for (o, wv) in w.iter().enumerate() {
                    pre.values[t * cout + o] += d * wv;
                }
            }
        }
        let mut h = self.activate(b, layer, pre);
        for (l, conv) in branch.iter().enumerate().skip(layer + 1) {
            h = self.activate(b, l, conv.forward(&h, false));
        }
        self.loss_with_branch_output(b, &h)
    }

    fn conv_loss(&self, b: usize, i: usize, bias: bool, index: usize, step: f64) -> f64 {
        let conv = &self.params.branches[b][i];
        let (cin, cout, pad) = (conv.in_channels, conv.out_channels, conv.padding());
        let input = &self.inputs[b][i];
        let len = input.length;
        let mut pre = self.pre[b][i].clone();
        let o = if bias {
            for t in 0..len {
                pre.values[t * cout + index] += step;
            }
            index
        } else {
            let (j, c, o) = (index / (cin * cout), (index / cout) % cin, index % cout);
            for t in 0..len {
                if let Some(src) = (t + j).checked_sub(pad).filter(|s| *s < len) {
                    pre.values[t * cout + o] += step * input.values[src * cin + c];
                }
            }
            o
        };
        let h = self.activate(b, i, pre);
        self.resume(b, i + 1, h, o)
    }

    fn head_loss(&self, tensor: usize, index: usize, step: f64) -> f64 {
        let mut fusion = self.params.fusion.clone();
        let mut fc_weight = self.params.fc_weight.clone();
        let mut fc_bias = self.params.fc_bias;
        match tensor {
            0 => fusion.weight[index] += step,
            1 => fusion.bias[index] += step,
            2 => fc_weight[index] += step,
            _ => fc_bias += step,
        }
        self.head(&self.pooled, &fusion, &fc_weight, fc_bias)
    }

    /// `f(h)` and whether that evaluation left the smooth piece containing `θ`.
    fn probe(&self, f: &dyn Fn(f64) -> f64, h: f64) -> (f64, bool) {
        self.crossed.set(false);
        let v = f(h);
        (v, self.crossed.get())
    }

    /// Second-order difference on the smooth piece containing `θ`: central
    /// when both sides are clean, one-sided `(−3f₀ + 4f₁ − f₂)/2h` when a kink
    /// lies on one side only, and a smaller step when it lies on both.
    fn central(&self, step: f64, f: &dyn Fn(f64) -> f64) -> f64 {
        let mut h = step;
        for attempt in 0..REFINEMENTS {
            let (plus, p_crossed) = self.probe(f, h);
            let (minus, m_crossed) = self.probe(f, -h);
            if !p_crossed && !m_crossed {
                if attempt > 0 {
                    self.refined.set(self.refined.get() + 1);
                }
                return (plus - minus) / (2.0 * h);
            }
            for (dir, near, near_crossed) in [(1.0, plus, p_crossed), (-1.0, minus, m_crossed)] {
                if near_crossed {
                    continue;
                }
                let (far, far_crossed) = self.probe(f, 2.0 * dir * h);
                if !far_crossed {
                    self.refined.set(self.refined.get() + 1);
                    let f0 = f(0.0);
                    return dir * (-3.0 * f0 + 4.0 * near - far) / (2.0 * h);
                }
            }
            h /= 10.0;
        }
        self.refined.set(self.refined.get() + 1);
        (f(h) - f(-h)) / (2.0 * h)
    }

    /// Numeric gradient of `(ŷ − target)²`, laid out like `named_tensors`.
    pub fn gradient(&self, step: f64) -> Vec<Vec<f64>> {
        self.refined.set(0);
        let mut out = Vec::new();
        for (b, branch) in self.params.branches.iter().enumerate() {
            for (i, conv) in branch.iter().enumerate() {
                out.push(
                    (0..conv.weight.len())
                        .map(|k| self.central(step, &|h| self.conv_loss(b, i, false, k, h)))
                        .collect(),
                );
                out.push(
                    (0..conv.bias.len())
                        .map(|k| self.central(step, &|h| self.conv_loss(b, i, true, k, h)))
                        .collect(),
                );
            }
        }
        let sizes = [
            self.params.fusion.weight.len(),
            self.params.fusion.bias.len(),
            self.params.fc_weight.len(),
            1,
        ];
        for (tensor, n) in sizes.into_iter().enumerate() {
            out.push(
                (0..n)
                    .map(|k| self.central(step, &|h| self.head_loss(tensor, k, h)))
                    .collect(),
            );
        }
        out
    }
}

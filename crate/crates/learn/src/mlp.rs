//! Dense ReLU network with a softmax head, trained on mean cross-entropy.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::LearnError;

/// Probabilities are clamped to this before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// One fully connected layer. `weights` is row-major `[n_out][n_in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(n_in: usize, n_out: usize) -> Layer {
        Layer {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            bias: vec![0.0; n_out],
        }
    }

    /// He-uniform weights, zero bias.
    pub fn he_uniform<R: Rng + ?Sized>(n_in: usize, n_out: usize, rng: &mut R) -> Layer {
        let limit = (6.0 / n_in as f64).sqrt();
        Layer {
            n_in,
            n_out,
            weights: (0..n_in * n_out)
                .map(|_| rng.gen_range(-limit..limit))
                .collect(),
            bias: vec![0.0; n_out],
        }
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.n_in)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
}

/// Per-layer gradients, shaped like [`MlpModel::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl MlpModel {
    /// Network over `dims` = [input, hidden…, classes] with He-uniform init.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<MlpModel, LearnError> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(LearnError::Config(format!("invalid layer dims {dims:?}")));
        }
        Ok(MlpModel {
            layers: dims
                .windows(2)
                .map(|w| Layer::he_uniform(w[0], w[1], rng))
                .collect(),
        })
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers[0].n_in];
        d.extend(self.layers.iter().map(|l| l.n_out));
        d
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.n_out)
    }

    /// Checks the layer chain is consistent.
    pub fn validate(&self) -> Result<(), LearnError> {
        if self.layers.is_empty() {
            return Err(LearnError::Config("model has no layers".into()));
        }
        for l in &self.layers {
            if l.weights.len() != l.n_in * l.n_out || l.bias.len() != l.n_out {
                return Err(LearnError::Config(
                    "layer buffer sizes disagree with dims".into(),
                ));
            }
        }
        for w in self.layers.windows(2) {
            if w[0].n_out != w[1].n_in {
                return Err(LearnError::Config("layer dimension chain is broken".into()));
            }
        }
        Ok(())
    }

    /// Pre-activations of every layer plus post-activations (input first).
    fn trace(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut acts = vec![x.to_vec()];
        let mut pre = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.affine(acts.last().expect("nonempty"));
            let a = if i + 1 == self.layers.len() {
                softmax(&z)
            } else {
                z.iter().map(|&v| v.max(0.0)).collect()
            };
            pre.push(z);
            acts.push(a);
        }
        (pre, acts)
    }

    /// Class probabilities for one input.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, LearnError> {
        if x.len() != self.input_dim() {
            return Err(LearnError::Dimension {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(self.trace(x).1.pop().expect("output layer"))
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize, LearnError> {
        Ok(argmax(&self.forward(x)?))
    }

    /// Mean cross-entropy and its exact gradient over a batch. The ReLU
    /// derivative at 0 is taken as 0.
    pub fn backward(
        &self,
        xs: &[&[f64]],
        labels: &[usize],
    ) -> Result<(f64, Gradients), LearnError> {
        if xs.is_empty() || xs.len() != labels.len() {
            return Err(LearnError::EmptyInput);
        }
        let mut grads = Gradients {
            layers: self
                .layers
                .iter()
                .map(|l| Layer::zeros(l.n_in, l.n_out))
                .collect(),
        };
        let scale = 1.0 / xs.len() as f64;
        let mut total_loss = 0.0;
        for (&x, &y) in xs.iter().zip(labels) {
            if x.len() != self.input_dim() {
                return Err(LearnError::Dimension {
                    expected: self.input_dim(),
                    got: x.len(),
                });
            }
            if y >= self.n_classes() {
                return Err(LearnError::LabelOutOfRange {
                    label: y,
                    n_classes: self.n_classes(),
                });
            }
            let (pre, acts) = self.trace(x);
            let probs = acts.last().expect("output");
            total_loss += loss(probs, y);
            // d loss / d logits for softmax + cross-entropy
            let mut delta: Vec<f64> = probs.clone();
            delta[y] -= 1.0;
            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                let input = &acts[li];
                let g = &mut grads.layers[li];
                for (o, &d) in delta.iter().enumerate() {
                    let ds = d * scale;
                    g.bias[o] += ds;
                    let row = &mut g.weights[o * layer.n_in..(o + 1) * layer.n_in];
                    for (w, &a) in row.iter_mut().zip(input) {
                        *w += ds * a;
                    }
                }
                if li == 0 {
                    break;
                }
                let prev_pre = &pre[li - 1];
                let mut next = vec![0.0; layer.n_in];
                for (o, &d) in delta.iter().enumerate() {
                    let row = &layer.weights[o * layer.n_in..(o + 1) * layer.n_in];
                    for (n, &w) in next.iter_mut().zip(row) {
                        *n += d * w;
                    }
                }
                for (n, &z) in next.iter_mut().zip(prev_pre) {
                    if z <= 0.0 {
                        *n = 0.0;
                    }
                }
                delta = next;
            }
        }
        Ok((total_loss * scale, grads))
    }

    /// Mean loss over a batch without gradients.
    pub fn mean_loss(&self, xs: &[&[f64]], labels: &[usize]) -> Result<f64, LearnError> {
        if xs.is_empty() {
            return Err(LearnError::EmptyInput);
        }
        let mut total = 0.0;
        for (&x, &y) in xs.iter().zip(labels) {
            total += loss(&self.forward(x)?, y);
        }
        Ok(total / xs.len() as f64)
    }

    /// Flat view of every parameter, layer by layer (weights then bias).
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }
}

impl Gradients {
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / s).collect()
}

/// −ln p[label], with p clamped at [`PROB_FLOOR`].
pub fn loss(probs: &[f64], label: usize) -> f64 {
    -probs[label].max(PROB_FLOOR).ln()
}

pub fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| {
            if x > bv {
                (i, x)
            } else {
                (bi, bv)
            }
        })
        .0
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(param_count: usize, lr: f64, beta1: f64, beta2: f64, eps: f64) -> AdamState {
        AdamState {
            lr,
            beta1,
            beta2,
            eps,
            step: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    /// Defaults lr = 1e-3, β1 = 0.9, β2 = 0.999, ε = 1e-8.
    pub fn for_model(model: &MlpModel) -> AdamState {
        let count = model
            .layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum();
        AdamState::new(count, 1e-3, 0.9, 0.999, 1e-8)
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    /// Updates `params` in place from `grads`, both in the same flat order.
    pub fn step<'a>(
        &mut self,
        params: impl Iterator<Item = &'a mut f64>,
        grads: impl Iterator<Item = f64>,
    ) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((p, g), m), v) in params.zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }

    pub fn apply(&mut self, model: &mut MlpModel, grads: &Gradients) {
        self.step(model.params_mut(), grads.values());
    }
}

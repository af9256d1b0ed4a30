use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: vec![64, 64],
            learning_rate: 0.003,
            epochs: 100,
            batch_size: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer {
    inputs: usize,
    outputs: usize,
    /// Row-major `outputs × inputs`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Layer {
    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let w = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            out.push(self.bias[o] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>());
        }
    }

    /// `wᵀ · delta`.
    fn back(&self, delta: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.inputs];
        for (o, d) in delta.iter().enumerate() {
            let w = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            for (gi, wi) in g.iter_mut().zip(w) {
                *gi += wi * d;
            }
        }
        g
    }
}

/// Fully connected network: ReLU hidden layers, softmax output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    layers: Vec<Layer>,
    pub config: TrainConfig,
}

struct Trace {
    /// Post-activation values per layer, starting with the input.
    activations: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Index of the largest entry; ties go to the lower index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

impl MlpModel {
    /// He-initialized network with the given layer widths (input first,
    /// classes last).
    pub fn init(widths: &[usize], config: TrainConfig) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::config(format!("invalid layer widths {widths:?}")));
        }
        let mut rng = rng_from_seed(derive_seed(config.seed, Stream::Model));
        let layers = widths
            .windows(2)
            .map(|w| {
                let normal = Normal::new(0.0, (2.0 / w[0] as f64).sqrt()).expect("positive std");
                Layer {
                    inputs: w[0],
                    outputs: w[1],
                    weights: (0..w[0] * w[1]).map(|_| normal.sample(&mut rng)).collect(),
                    bias: vec![0.0; w[1]],
                }
            })
            .collect();
        Ok(MlpModel { layers, config })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().map(|l| l.outputs).unwrap_or(0)
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let mut activations = vec![x.to_vec()];
        let mut z = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.apply(activations.last().expect("input"), &mut z);
            if i < last {
                activations.push(z.iter().map(|v| v.max(0.0)).collect());
            }
        }
        Trace {
            activations,
            probs: softmax(&z),
        }
    }

    /// Class probabilities.
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        self.trace(x).probs
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.predict_proba(x))
    }

    /// Backpropagate `dL/dlogits`, adding parameter gradients into `acc`
    /// when given. Returns `dL/dx`.
    fn backward(&self, t: &Trace, mut delta: Vec<f64>, mut acc: Option<&mut [(Vec<f64>, Vec<f64>)]>) -> Vec<f64> {
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &t.activations[i];
            if let Some(acc) = acc.as_deref_mut() {
                let (dw, db) = &mut acc[i];
                for (o, d) in delta.iter().enumerate() {
                    db[o] += d;
                    let row = &mut dw[o * layer.inputs..(o + 1) * layer.inputs];
                    for (w, a) in row.iter_mut().zip(input) {
                        *w += d * a;
                    }
                }
            }
            let mut back = layer.back(&delta);
            if i > 0 {
                for (b, a) in back.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *b = 0.0;
                    }
                }
            }
            delta = back;
        }
        delta
    }

    /// Pre-softmax class scores.
    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        let t = self.trace(x);
        let h = t.activations.last().expect("input");
        let mut z = Vec::new();
        self.layers.last().expect("output layer").apply(h, &mut z);
        z
    }

    /// `∂F_class/∂x`, where `F` is the logit of `class`.
    pub fn input_gradient(&self, x: &[f64], class: usize) -> Vec<f64> {
        let t = self.trace(x);
        let mut delta = vec![0.0; t.probs.len()];
        delta[class] = 1.0;
        self.backward(&t, delta, None)
    }

    /// Gradient of the predicted class logit, with that class.
    pub fn predicted_gradient(&self, x: &[f64]) -> (usize, Vec<f64>) {
        let c = self.predict(x);
        (c, self.input_gradient(x, c))
    }

    pub fn accuracy(&self, inputs: &[f64], labels: &[usize]) -> f64 {
        let d = self.input_dim();
        let hits = inputs
            .chunks(d)
            .zip(labels)
            .filter(|(x, &y)| self.predict(x) == y)
            .count();
        hits as f64 / labels.len() as f64
    }
}

const ADAM_B1: f64 = 0.9;
const ADAM_B2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

fn adam_step(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], scale: f64, lr: f64) {
    for j in 0..p.len() {
        let gj = g[j] * scale;
        m[j] = ADAM_B1 * m[j] + (1.0 - ADAM_B1) * gj;
        v[j] = ADAM_B2 * v[j] + (1.0 - ADAM_B2) * gj * gj;
        p[j] -= lr * m[j] / (v[j].sqrt() + ADAM_EPS);
    }
}

/// Train with Adam on mean cross-entropy. `inputs` is row-major `n × d`.
pub fn train(inputs: &[f64], labels: &[usize], dim: usize, config: &TrainConfig) -> Result<MlpModel> {
    if dim == 0 || inputs.len() != labels.len() * dim || labels.is_empty() {
        return Err(Error::config(format!(
            "inputs of length {} do not match {} labels of dimension {dim}",
            inputs.len(),
            labels.len()
        )));
    }
    if config.batch_size == 0 || config.learning_rate.is_nan() || config.learning_rate <= 0.0 {
        return Err(Error::config("batch size and learning rate must be positive"));
    }
    let classes = labels.iter().max().copied().unwrap_or(0).max(1) + 1;
    let mut widths = vec![dim];
    widths.extend(&config.hidden);
    widths.push(classes);
    let mut model = MlpModel::init(&widths, config.clone())?;

    let mut m: Vec<(Vec<f64>, Vec<f64>)> = model
        .layers
        .iter()
        .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]))
        .collect();
    let mut v = m.clone();
    let mut acc = m.clone();
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..labels.len()).collect();
    let mut rng = rng_from_seed(derive_seed(config.seed, Stream::Subsample));

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            acc.iter_mut().for_each(|(w, b)| {
                w.fill(0.0);
                b.fill(0.0);
            });
            for &i in batch {
                let t = model.trace(&inputs[i * dim..(i + 1) * dim]);
                loss -= t.probs[labels[i]].max(1e-300).ln();
                let mut delta = t.probs.clone();
                delta[labels[i]] -= 1.0;
                model.backward(&t, delta, Some(&mut acc));
            }
            step += 1;
            let scale = 1.0 / batch.len() as f64;
            let lr = config.learning_rate * (1.0 - ADAM_B2.powi(step)).sqrt() / (1.0 - ADAM_B1.powi(step));
            for (l, layer) in model.layers.iter_mut().enumerate() {
                let (mw, mb) = &mut m[l];
                let (vw, vb) = &mut v[l];
                adam_step(&mut layer.weights, &acc[l].0, mw, vw, scale, lr);
                adam_step(&mut layer.bias, &acc[l].1, mb, vb, scale, lr);
            }
        }
        if !loss.is_finite() {
            return Err(Error::Training(format!(
                "loss became non-finite at epoch {epoch} with config {config:?}"
            )));
        }
    }
    Ok(model)
}

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, Rng, Stream};
use crate::spaces::{ExplanationKind, ExplanationSet};
use crate::synth::JaggedBoundaryTask;

use super::mlp::MlpModel;

pub const DEFAULT_SMOOTH_DRAWS: usize = 500;
pub const DEFAULT_IG_STEPS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ExplainerSpec {
    /// `|∂F_c/∂x|`, or the signed gradient when `signed`.
    Saliency { signed: bool },
    InputXGradient,
    /// Zero baseline, midpoint rule over `steps` path points.
    IntegratedGradients { steps: usize },
    Smooth {
        inner: Box<ExplainerSpec>,
        sigma: f64,
        num_draws: usize,
    },
    /// Mean absolute gradient over the reference dataset, for every input.
    ConstantGlobal,
}

impl ExplainerSpec {
    pub fn saliency() -> Self {
        ExplainerSpec::Saliency { signed: false }
    }

    pub fn integrated_gradients() -> Self {
        ExplainerSpec::IntegratedGradients {
            steps: DEFAULT_IG_STEPS,
        }
    }

    pub fn smooth(inner: ExplainerSpec, sigma: f64) -> Self {
        ExplainerSpec::Smooth {
            inner: Box::new(inner),
            sigma,
            num_draws: DEFAULT_SMOOTH_DRAWS,
        }
    }

    pub fn name(&self) -> String {
        match self {
            ExplainerSpec::Saliency { signed: false } => "saliency".into(),
            ExplainerSpec::Saliency { signed: true } => "saliency_signed".into(),
            ExplainerSpec::InputXGradient => "input_x_gradient".into(),
            ExplainerSpec::IntegratedGradients { .. } => "integrated_gradients".into(),
            ExplainerSpec::Smooth { inner, sigma, .. } => format!("smooth({},{sigma})", inner.name()),
            ExplainerSpec::ConstantGlobal => "constant_global".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ExplainerSpec::IntegratedGradients { steps: 0 } => {
                Err(Error::config("integrated gradients needs steps ≥ 1"))
            }
            ExplainerSpec::Smooth {
                inner,
                sigma,
                num_draws,
            } => {
                if !(sigma.is_finite() && *sigma >= 0.0) {
                    return Err(Error::config(format!("smoothing sigma must be ≥ 0, got {sigma}")));
                }
                if *num_draws == 0 {
                    return Err(Error::config("smoothing needs num_draws ≥ 1"));
                }
                inner.validate()
            }
            _ => Ok(()),
        }
    }

    fn needs_global(&self) -> bool {
        match self {
            ExplainerSpec::ConstantGlobal => true,
            ExplainerSpec::Smooth { inner, .. } => inner.needs_global(),
            _ => false,
        }
    }
}

/// An explainer bound to a trained model.
pub struct Explainer<'a> {
    model: &'a MlpModel,
    spec: ExplainerSpec,
    global: Option<Vec<f64>>,
}

impl<'a> Explainer<'a> {
    /// `reference` (row-major inputs) is only used by [`ExplainerSpec::ConstantGlobal`].
    pub fn new(model: &'a MlpModel, spec: ExplainerSpec, reference: &[f64]) -> Result<Self> {
        spec.validate()?;
        let d = model.input_dim();
        let global = if spec.needs_global() {
            if reference.is_empty() || !reference.len().is_multiple_of(d) {
                return Err(Error::config("constant-global explainer needs reference inputs"));
            }
            let n = reference.len() / d;
            let sum = reference
                .par_chunks(d)
                .map(|x| {
                    let (_, g) = model.predicted_gradient(x);
                    g.into_iter().map(f64::abs).collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
                .into_iter()
                .fold(vec![0.0; d], |mut acc, g| {
                    acc.iter_mut().zip(g).for_each(|(a, v)| *a += v);
                    acc
                });
            Some(sum.into_iter().map(|v| v / n as f64).collect())
        } else {
            None
        };
        Ok(Explainer { model, spec, global })
    }

    pub fn spec(&self) -> &ExplainerSpec {
        &self.spec
    }

    pub fn explain(&self, x: &[f64], rng: &mut Rng) -> Vec<f64> {
        self.explain_with(&self.spec, x, rng)
    }

    fn explain_with(&self, spec: &ExplainerSpec, x: &[f64], rng: &mut Rng) -> Vec<f64> {
        let m = self.model;
        match spec {
            ExplainerSpec::Saliency { signed } => {
                let (_, g) = m.predicted_gradient(x);
                if *signed {
                    g
                } else {
                    g.into_iter().map(f64::abs).collect()
                }
            }
            ExplainerSpec::InputXGradient => {
                let (_, g) = m.predicted_gradient(x);
                g.iter().zip(x).map(|(a, b)| a * b).collect()
            }
            ExplainerSpec::IntegratedGradients { steps } => {
                let c = m.predict(x);
                let mut acc = vec![0.0; x.len()];
                let mut point = vec![0.0; x.len()];
                for k in 1..=*steps {
                    let alpha = (k as f64 - 0.5) / *steps as f64;
                    point.iter_mut().zip(x).for_each(|(p, xi)| *p = alpha * xi);
                    let g = m.input_gradient(&point, c);
                    acc.iter_mut().zip(g).for_each(|(a, gi)| *a += gi);
                }
                acc.iter()
                    .zip(x)
                    .map(|(a, xi)| xi * a / *steps as f64)
                    .collect()
            }
            ExplainerSpec::Smooth {
                inner,
                sigma,
                num_draws,
            } => {
                if *sigma == 0.0 {
                    return self.explain_with(inner, x, rng);
                }
                let normal = Normal::new(0.0, *sigma).expect("validated sigma");
                let mut acc = vec![0.0; x.len()];
                let mut noisy = vec![0.0; x.len()];
                for _ in 0..*num_draws {
                    noisy
                        .iter_mut()
                        .zip(x)
                        .for_each(|(p, xi)| *p = xi + normal.sample(rng));
                    let e = self.explain_with(inner, &noisy, rng);
                    acc.iter_mut().zip(e).for_each(|(a, v)| *a += v);
                }
                acc.into_iter().map(|v| v / *num_draws as f64).collect()
            }
            ExplainerSpec::ConstantGlobal => self.global.clone().expect("computed in new"),
        }
    }

    /// Explain every row of `inputs` (row-major), in parallel. Row `i` draws
    /// from its own stream, so the result does not depend on thread count.
    pub fn explain_set(&self, inputs: &[f64], seed: u64) -> Result<ExplanationSet> {
        let d = self.model.input_dim();
        if inputs.is_empty() || !inputs.len().is_multiple_of(d) {
            return Err(Error::config(format!(
                "input length {} is not a multiple of {d}",
                inputs.len()
            )));
        }
        let base = derive_seed(seed, Stream::Explainer);
        let data: Vec<f64> = inputs
            .par_chunks(d)
            .enumerate()
            .flat_map_iter(|(i, x)| {
                let mut rng = rng_from_seed(derive_seed(base, Stream::Repeat(i as u64)));
                self.explain(x, &mut rng)
            })
            .collect();
        ExplanationSet::new(ExplanationKind::Attribution(d), data)
    }
}

/// Fraction of points whose largest-magnitude attribution is the ground-truth
/// feature. Ties count as incorrect.
pub fn explainer_accuracy(task: &JaggedBoundaryTask, explanations: &ExplanationSet) -> Result<f64> {
    if explanations.dim() != 2 || explanations.len() != task.len() {
        return Err(Error::config(format!(
            "expected {} two-dimensional explanations, got {} of dimension {}",
            task.len(),
            explanations.len(),
            explanations.dim()
        )));
    }
    let hits = explanations
        .rows()
        .zip(&task.ground_truth_feature)
        .filter(|(e, &gt)| {
            let (a, b) = (e[0].abs(), e[1].abs());
            a != b && usize::from(b > a) == gt
        })
        .count();
    Ok(hits as f64 / task.len() as f64)
}

//! A small trainable classifier with exact input gradients, and gradient
//! explainers on top of it.

mod explainers;
mod mlp;

pub use explainers::{
    explainer_accuracy, Explainer, ExplainerSpec, DEFAULT_IG_STEPS, DEFAULT_SMOOTH_DRAWS,
};
pub use mlp::{argmax, train, MlpModel, TrainConfig};

use crate::error::Result;
use crate::synth::JaggedBoundaryTask;

/// Train the default network on a jagged-boundary task.
pub fn train_on_task(task: &JaggedBoundaryTask, config: &TrainConfig) -> Result<MlpModel> {
    let labels: Vec<usize> = task.labels.iter().map(|&l| usize::from(l)).collect();
    train(&task.inputs(), &labels, 2, config)
}

//! Wasserstein globalness of explanation distributions.
//!
//! A set of model explanations is scored by how far its (centered) empirical
//! distribution sits from a uniform, minimally-global baseline over the
//! explanation space. Explainers that hand out the same explanation for every
//! input score 1 after normalization; explanations spread like the baseline
//! score 0.
//!
//! The crate is organised bottom-up:
//!
//! - [`spaces`]: explanation kinds, validated containers and ground metrics.
//! - [`baseline`]: uniform baselines, the shared ball radius and centering.
//! - [`ot`]: Wasserstein solvers (1-D, exact assignment, Sinkhorn, sliced).
//! - [`globalness`]: the metric itself, its normalizer and convergence curves.
//! - [`candidates`]: entropy / KL / TV rivals and the transformation study.
//! - [`synth`]: synthetic explanation distributions and the jagged-boundary task.
//! - [`explain`]: a small MLP with exact gradients and gradient explainers.
//! - [`axioms`] and [`studies`]: the property suite and reproducible studies.
//! - [`io`]: the explanation file format.

pub mod axioms;
pub mod baseline;
pub mod candidates;
pub mod error;
pub mod explain;
pub mod globalness;
pub mod io;
pub mod ot;
pub mod rng;
pub mod spaces;
pub mod stats;
pub mod studies;
pub mod synth;

pub use baseline::{center, estimate_radius_k, Baseline};
pub use error::{Error, Result};
pub use globalness::{dirac_normalizer, wg, wg_raw, GlobalnessReport, SpaceConfig};
pub use ot::{SolverConfig, SolverMethod, TransportPlanResult};
pub use spaces::{
    distance, validate_set, DistanceSpec, ExplanationKind, ExplanationSet, Metric, Violation,
};

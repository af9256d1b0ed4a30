//! Synthetic explanation distributions and the jagged-boundary task.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::spaces::{ExplanationKind, ExplanationSet};

/// A finite mixture of 1-D Gaussians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture1D {
    /// `(weight, mean, std)` per component; weights sum to 1.
    pub components: Vec<(f64, f64, f64)>,
}

impl GaussianMixture1D {
    /// `0.5·N(3, 0.5²) + 0.5·N(−12, 1.9²)`, the bimodal explanation
    /// distribution used by the transformation study.
    pub fn bimodal() -> Self {
        GaussianMixture1D {
            components: vec![(0.5, 3.0, 0.5), (0.5, -12.0, 1.9)],
        }
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|(w, m, _)| w * m).sum()
    }

    pub fn density(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|&(w, m, s)| {
                let z = (x - m) / s;
                w * (-0.5 * z * z).exp() / (s * (2.0 * PI).sqrt())
            })
            .sum()
    }

    pub fn draw(&self, rng: &mut impl rand::Rng) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = self.components.len() - 1;
        for (i, &(w, _, _)) in self.components.iter().enumerate() {
            acc += w;
            if u < acc {
                chosen = i;
                break;
            }
        }
        let (_, m, s) = self.components[chosen];
        Normal::new(m, s).expect("valid component").sample(rng)
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }
}

/// `n` draws from [`GaussianMixture1D::bimodal`]: a fair coin picks the
/// component, then a Gaussian draw.
pub fn gaussian_mixture_1d(seed: u64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::config("sample size must be >= 1"));
    }
    Ok(GaussianMixture1D::bimodal().sample(n, seed))
}

/// Fixed cluster geometry of the jagged-boundary task.
pub const CLUSTER_CENTERS: [[f64; 2]; 2] = [[-3.0, 0.0], [3.0, 0.0]];
pub const CLUSTER_STD: f64 = 0.8;
/// Relevant feature of each cluster.
pub const CLUSTER_FEATURE: [usize; 2] = [0, 1];

/// Two Gaussian clusters in ℝ², each split into two classes along its own
/// relevant feature, optionally perturbed by label flooding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JaggedBoundaryTask {
    pub points: Vec<[f64; 2]>,
    pub labels: Vec<u8>,
    /// Labels before perturbation.
    pub clean_labels: Vec<u8>,
    pub cluster: Vec<usize>,
    pub ground_truth_feature: Vec<usize>,
    pub perturbation_scale: f64,
    pub seed: u64,
}

impl JaggedBoundaryTask {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn flipped_fraction(&self) -> f64 {
        let flips = self
            .labels
            .iter()
            .zip(&self.clean_labels)
            .filter(|(a, b)| a != b)
            .count();
        flips as f64 / self.len() as f64
    }

    /// Points as an `N × 2` matrix, row-major.
    pub fn inputs(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| p.iter().copied()).collect()
    }

    /// One-hot ground-truth attributions.
    pub fn ground_truth_explanations(&self) -> ExplanationSet {
        let data = self
            .ground_truth_feature
            .iter()
            .flat_map(|&f| if f == 0 { [1.0, 0.0] } else { [0.0, 1.0] })
            .collect();
        ExplanationSet::from_trusted(ExplanationKind::Attribution(2), data)
    }

    /// CSV with columns `x0,x1,label,gt_feature`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x0,x1,label,gt_feature\n");
        for i in 0..self.len() {
            let [x0, x1] = self.points[i];
            out.push_str(&format!(
                "{x0},{x1},{},{}\n",
                self.labels[i], self.ground_truth_feature[i]
            ));
        }
        out
    }
}

/// Generate the task and apply the label-flood perturbation.
///
/// Points are visited in a seeded random order. Each unvisited point copies
/// its label onto every unvisited neighbour strictly within
/// `perturbation_scale`, and both writer and targets are marked visited.
pub fn jagged_boundary(n: usize, perturbation_scale: f64, seed: u64) -> Result<JaggedBoundaryTask> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::config(format!("jagged boundary needs an even N >= 4, got {n}")));
    }
    if perturbation_scale.is_nan() || perturbation_scale < 0.0 {
        return Err(Error::config("perturbation scale must be non-negative"));
    }
    let mut rng = rng_from_seed(seed);
    let noise = Normal::new(0.0, CLUSTER_STD).expect("valid std");
    let half = n / 2;
    let mut points = Vec::with_capacity(n);
    let mut cluster = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for c in 0..2 {
        let center = CLUSTER_CENTERS[c];
        let feature = CLUSTER_FEATURE[c];
        for _ in 0..half {
            let p = [center[0] + noise.sample(&mut rng), center[1] + noise.sample(&mut rng)];
            labels.push(u8::from(p[feature] > center[feature]));
            points.push(p);
            cluster.push(c);
        }
    }
    let clean_labels = labels.clone();
    let ground_truth_feature = cluster.iter().map(|&c| CLUSTER_FEATURE[c]).collect();

    if perturbation_scale > 0.0 {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        flood_labels(&points, &mut labels, &order, perturbation_scale);
    }

    Ok(JaggedBoundaryTask {
        points,
        labels,
        clean_labels,
        cluster,
        ground_truth_feature,
        perturbation_scale,
        seed,
    })
}

/// One sweep visits every point, so the outer "until all visited" loop of the
/// flood terminates after a single pass.
fn flood_labels(points: &[[f64; 2]], labels: &mut [u8], order: &[usize], radius: f64) {
    let r2 = radius * radius;
    let mut visited = vec![false; points.len()];
    for &x in order {
        if visited[x] {
            continue;
        }
        visited[x] = true;
        let px = points[x];
        for (y, py) in points.iter().enumerate() {
            if visited[y] {
                continue;
            }
            let d2 = (px[0] - py[0]).powi(2) + (px[1] - py[1]).powi(2);
            if d2 < r2 {
                labels[y] = labels[x];
                visited[y] = true;
            }
        }
    }
}

/// Row-wise maps applied to explanation sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TransformSpec {
    Translate { by: Vec<f64> },
    /// Negate one coordinate.
    Reflect { axis: usize },
    /// Rotation by `angle` radians in the plane of axes `(i, j)`.
    Rotate { angle: f64, i: usize, j: usize },
    Scale { factor: f64 },
    /// Output feature `k` takes input feature `perm[k]`.
    PermuteFeatures { perm: Vec<usize> },
}

impl TransformSpec {
    pub fn is_isometry(&self) -> bool {
        match self {
            TransformSpec::Translate { .. }
            | TransformSpec::Reflect { .. }
            | TransformSpec::Rotate { .. } => true,
            TransformSpec::Scale { factor } => factor.abs() == 1.0,
            TransformSpec::PermuteFeatures { .. } => false,
        }
    }
}

/// Apply `t` to every row of `set`.
pub fn apply_transform(set: &ExplanationSet, t: &TransformSpec) -> Result<ExplanationSet> {
    let s = set.dim();
    let geometric = !matches!(t, TransformSpec::PermuteFeatures { .. });
    if geometric && !matches!(set.kind(), ExplanationKind::Attribution(_)) {
        return Err(Error::config(format!(
            "geometric transforms apply to attributions only, got {}",
            set.kind()
        )));
    }
    let mut data = set.data().to_vec();
    match t {
        TransformSpec::Translate { by } => {
            if by.len() != s {
                return Err(Error::config("translation vector has the wrong dimension"));
            }
            for row in data.chunks_exact_mut(s) {
                for (x, v) in row.iter_mut().zip(by) {
                    *x += v;
                }
            }
        }
        TransformSpec::Reflect { axis } => {
            if *axis >= s {
                return Err(Error::config("reflection axis out of range"));
            }
            for row in data.chunks_exact_mut(s) {
                row[*axis] = -row[*axis];
            }
        }
        TransformSpec::Rotate { angle, i, j } => {
            if *i >= s || *j >= s || i == j {
                return Err(Error::config("rotation needs two distinct axes in range"));
            }
            let (sin, cos) = angle.sin_cos();
            for row in data.chunks_exact_mut(s) {
                let (a, b) = (row[*i], row[*j]);
                row[*i] = cos * a - sin * b;
                row[*j] = sin * a + cos * b;
            }
        }
        TransformSpec::Scale { factor } => {
            if !factor.is_finite() {
                return Err(Error::config("scale factor must be finite"));
            }
            for x in data.iter_mut() {
                *x *= factor;
            }
        }
        TransformSpec::PermuteFeatures { perm } => {
            let mut seen = vec![false; s];
            if perm.len() != s || perm.iter().any(|&k| k >= s || std::mem::replace(&mut seen[k], true)) {
                return Err(Error::config("feature permutation must be a permutation of 0..s"));
            }
            for row in data.chunks_exact_mut(s) {
                let old = row.to_vec();
                for (k, &src) in perm.iter().enumerate() {
                    row[k] = old[src];
                }
            }
        }
    }
    ExplanationSet::new(set.kind(), data)
}

/// `n` draws from a 2-D Gaussian with the given mean and isotropic std.
pub fn gaussian_blob(n: usize, mean: [f64; 2], std: f64, seed: u64) -> ExplanationSet {
    let mut rng = rng_from_seed(seed);
    let normal = Normal::new(0.0, std).expect("valid std");
    let data = (0..n)
        .flat_map(|_| [mean[0] + normal.sample(&mut rng), mean[1] + normal.sample(&mut rng)])
        .collect();
    ExplanationSet::from_trusted(ExplanationKind::Attribution(2), data)
}

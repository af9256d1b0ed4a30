//! Minimally-global baseline distributions, the shared ball radius and the
//! centering map.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::spaces::{ExplanationKind, ExplanationSet};

/// Uniform distribution over an explanation space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Baseline {
    /// Uniform on the closed ball `{x : |x|₂ ≤ radius}` in ℝ^dim.
    UniformBall { radius: f64, dim: usize },
    /// Uniform on the vertices of {0,1}^dim.
    UniformHypercube { dim: usize },
    /// Uniform on the permutations of `0..dim`.
    UniformPermutations { dim: usize },
}

impl Baseline {
    pub fn dim(&self) -> usize {
        match *self {
            Baseline::UniformBall { dim, .. }
            | Baseline::UniformHypercube { dim }
            | Baseline::UniformPermutations { dim } => dim,
        }
    }

    /// The explanation kind this baseline lives on.
    pub fn kind(&self) -> ExplanationKind {
        match *self {
            Baseline::UniformBall { dim, .. } => ExplanationKind::Attribution(dim),
            Baseline::UniformHypercube { dim } => ExplanationKind::Selection(dim),
            Baseline::UniformPermutations { dim } => ExplanationKind::Ranking(dim),
        }
    }

    /// Default baseline for a kind. Attribution baselines need a radius.
    pub fn for_kind(kind: ExplanationKind, radius: Option<f64>) -> Result<Self> {
        let b = match kind {
            ExplanationKind::Attribution(dim) => Baseline::UniformBall {
                radius: radius.ok_or_else(|| {
                    Error::config("attribution baselines need a ball radius k")
                })?,
                dim,
            },
            ExplanationKind::Selection(dim) => Baseline::UniformHypercube { dim },
            ExplanationKind::Ranking(dim) => Baseline::UniformPermutations { dim },
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::config("baseline dimension must be >= 1"));
        }
        if let Baseline::UniformBall { radius, .. } = *self {
            if radius == 0.0 {
                return Err(Error::DegenerateRadius);
            }
            if !(radius.is_finite() && radius > 0.0) {
                return Err(Error::config(format!("ball radius must be positive, got {radius}")));
            }
        }
        Ok(())
    }

    /// `n` i.i.d. draws, deterministic in `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<ExplanationSet> {
        self.validate()?;
        if n == 0 {
            return Err(Error::config("baseline sample size must be >= 1"));
        }
        let mut rng = rng_from_seed(seed);
        let s = self.dim();
        let mut data = Vec::with_capacity(n * s);
        match *self {
            Baseline::UniformBall { radius, .. } => {
                let mut dir = vec![0.0; s];
                for _ in 0..n {
                    // Gaussian direction, rejecting the (measure-zero) origin
                    let norm = loop {
                        for d in dir.iter_mut() {
                            *d = StandardNormal.sample(&mut rng);
                        }
                        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
                        if norm > 0.0 {
                            break norm;
                        }
                    };
                    let u: f64 = rng.random();
                    let r = radius * u.powf(1.0 / s as f64);
                    data.extend(dir.iter().map(|d| d / norm * r));
                }
            }
            Baseline::UniformHypercube { .. } => {
                for _ in 0..n * s {
                    data.push(if rng.random::<bool>() { 1.0 } else { 0.0 });
                }
            }
            Baseline::UniformPermutations { .. } => {
                let mut perm: Vec<f64> = (0..s).map(|i| i as f64).collect();
                for _ in 0..n {
                    perm.shuffle(&mut rng);
                    data.extend_from_slice(&perm);
                }
            }
        }
        Ok(ExplanationSet::from_trusted(self.kind(), data))
    }

    /// The centered point mass used for normalization: the origin, the
    /// all-zeros vertex, or the identity permutation.
    pub fn dirac_point(&self) -> Vec<f64> {
        match *self {
            Baseline::UniformBall { dim, .. } | Baseline::UniformHypercube { dim } => vec![0.0; dim],
            Baseline::UniformPermutations { dim } => (0..dim).map(|i| i as f64).collect(),
        }
    }
}

/// Largest ℓ2 norm over all rows of all sets: the radius `k` of a ball that
/// contains every set's support.
///
/// Callers comparing explainers pass every (centered) set at once so that all
/// of them are scored against the same baseline.
pub fn estimate_radius_k(sets: &[&ExplanationSet]) -> Result<f64> {
    let first = sets
        .first()
        .ok_or_else(|| Error::config("radius estimation needs at least one explanation set"))?;
    let dim = first.dim();
    let mut k: f64 = 0.0;
    for set in sets {
        if !matches!(set.kind(), ExplanationKind::Attribution(_)) {
            return Err(Error::config(format!(
                "radius estimation needs attribution sets, got {}",
                set.kind()
            )));
        }
        if set.dim() != dim {
            return Err(Error::config(format!(
                "radius estimation needs equal dimensions, got {dim} and {}",
                set.dim()
            )));
        }
        for row in set.rows() {
            k = k.max(row.iter().map(|x| x * x).sum::<f64>().sqrt());
        }
    }
    if k == 0.0 {
        return Err(Error::DegenerateRadius);
    }
    Ok(k)
}

/// Column means with Neumaier-compensated sums.
fn column_means(set: &ExplanationSet) -> Vec<f64> {
    let s = set.dim();
    let mut sums = vec![0.0; s];
    let mut comp = vec![0.0; s];
    for row in set.rows() {
        for j in 0..s {
            let x = row[j];
            let t = sums[j] + x;
            if sums[j].abs() >= x.abs() {
                comp[j] += (sums[j] - t) + x;
            } else {
                comp[j] += (x - t) + sums[j];
            }
            sums[j] = t;
        }
    }
    let n = set.len() as f64;
    sums.iter().zip(&comp).map(|(s, c)| (s + c) / n).collect()
}

/// Mean-zero translation for attributions; identity for selections and rankings.
///
/// A column whose mean is already below the rounding floor of its own sum is
/// left untouched, which makes centering exactly idempotent.
pub fn center(set: &ExplanationSet) -> ExplanationSet {
    if !matches!(set.kind(), ExplanationKind::Attribution(_)) {
        return set.clone();
    }
    let s = set.dim();
    let means = column_means(set);
    let mut scale = vec![0.0f64; s];
    for row in set.rows() {
        for (m, x) in scale.iter_mut().zip(row) {
            *m = m.max(x.abs());
        }
    }
    let floor = 16.0 * f64::EPSILON;
    let shift: Vec<f64> = means
        .iter()
        .zip(&scale)
        .map(|(&m, &sc)| if m.abs() <= floor * sc { 0.0 } else { m })
        .collect();
    if shift.iter().all(|&m| m == 0.0) {
        return set.clone();
    }
    let data = set
        .rows()
        .flat_map(|row| row.iter().zip(&shift).map(|(x, m)| x - m).collect::<Vec<_>>())
        .collect();
    ExplanationSet::from_trusted(set.kind(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attr(rows: &[&[f64]]) -> ExplanationSet {
        let dim = rows[0].len();
        ExplanationSet::from_rows(ExplanationKind::Attribution(dim), rows).unwrap()
    }

    #[test]
    fn radius_is_max_norm_across_sets() {
        let a = attr(&[&[3.0, 4.0]]);
        let b = attr(&[&[0.0, 1.0]]);
        assert_eq!(estimate_radius_k(&[&a, &b]).unwrap(), 5.0);
    }

    #[test]
    fn radius_errors() {
        let z = attr(&[&[0.0, 0.0]]);
        assert!(matches!(estimate_radius_k(&[&z]), Err(Error::DegenerateRadius)));
        assert!(matches!(estimate_radius_k(&[]), Err(Error::Config(_))));
        let sel = ExplanationSet::from_rows(ExplanationKind::Selection(2), &[[1.0, 0.0]]).unwrap();
        assert!(matches!(estimate_radius_k(&[&sel]), Err(Error::Config(_))));
        let a = attr(&[&[1.0, 0.0]]);
        let c = attr(&[&[1.0, 0.0, 0.0]]);
        assert!(estimate_radius_k(&[&a, &c]).is_err());
    }

    #[test]
    fn zero_radius_baseline_is_degenerate() {
        let b = Baseline::UniformBall { radius: 0.0, dim: 2 };
        assert!(matches!(b.sample(4, 1), Err(Error::DegenerateRadius)));
    }

    #[test]
    fn centering_examples() {
        let c = center(&attr(&[&[1.0, 1.0], &[3.0, 3.0]]));
        assert_eq!(c.data(), &[-1.0, -1.0, 1.0, 1.0]);
        let c = center(&attr(&[&[5.0]]));
        assert_eq!(c.data(), &[0.0]);
        let sel = ExplanationSet::from_rows(ExplanationKind::Selection(2), &[[1.0, 0.0], [1.0, 1.0]]).unwrap();
        assert_eq!(center(&sel), sel);
    }

    #[test]
    fn ball_samples_stay_inside() {
        let b = Baseline::UniformBall { radius: 2.5, dim: 3 };
        let set = b.sample(2000, 11).unwrap();
        for row in set.rows() {
            assert!(row.iter().map(|x| x * x).sum::<f64>().sqrt() <= 2.5);
        }
    }

    #[test]
    fn sampling_is_seeded() {
        for b in [
            Baseline::UniformBall { radius: 1.0, dim: 2 },
            Baseline::UniformHypercube { dim: 4 },
            Baseline::UniformPermutations { dim: 5 },
        ] {
            let x = b.sample(50, 3).unwrap();
            let y = b.sample(50, 3).unwrap();
            let z = b.sample(50, 4).unwrap();
            assert_eq!(x.data(), y.data());
            assert_ne!(x.data(), z.data());
        }
    }

    #[test]
    fn dirac_points() {
        assert_eq!(Baseline::UniformPermutations { dim: 3 }.dirac_point(), vec![0.0, 1.0, 2.0]);
        assert_eq!(Baseline::UniformHypercube { dim: 2 }.dirac_point(), vec![0.0, 0.0]);
    }
}

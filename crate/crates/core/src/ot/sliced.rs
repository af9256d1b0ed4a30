use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::spaces::{ExplanationKind, ExplanationSet};

use super::one_d::sorted_power_cost;
use super::{check_pair, SolverMethod, TransportPlanResult};

/// `count` directions uniform on the unit sphere in ℝ^dim, row-major.
pub fn random_directions(dim: usize, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(dim * count);
    let mut v = vec![0.0; dim];
    for _ in 0..count {
        let norm = loop {
            for x in v.iter_mut() {
                *x = StandardNormal.sample(&mut rng);
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                break norm;
            }
        };
        out.extend(v.iter().map(|x| x / norm));
    }
    out
}

fn project_sorted(set: &ExplanationSet, dir: &[f64]) -> Vec<f64> {
    let mut proj: Vec<f64> = set
        .rows()
        .map(|row| row.iter().zip(dir).map(|(x, d)| x * d).sum())
        .collect();
    proj.sort_unstable_by(f64::total_cmp);
    proj
}

/// Sliced p-Wasserstein distance: the p-th root of the mean, over random
/// directions, of the 1-D `W_p^p` between the projected samples.
///
/// Deterministic for a given seed; per-projection terms are summed in
/// projection order so parallel execution does not change the result.
pub fn sliced_wasserstein(
    a: &ExplanationSet,
    b: &ExplanationSet,
    p: f64,
    num_projections: usize,
    seed: u64,
) -> Result<TransportPlanResult> {
    let method = SolverMethod::Sliced { num_projections };
    method.validate()?;
    if !matches!(a.kind(), ExplanationKind::Attribution(_)) {
        return Err(Error::config(format!(
            "sliced solver needs attribution sets, got {}; use sinkhorn or exact",
            a.kind()
        )));
    }
    check_pair(a, b)?;
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::config(format!("Wasserstein order p must be positive, got {p}")));
    }
    let dim = a.dim();
    let dirs = random_directions(dim, num_projections, seed);
    let terms: Vec<f64> = dirs
        .par_chunks(dim)
        .map(|dir| sorted_power_cost(&project_sorted(a, dir), &project_sorted(b, dir), p))
        .collect();
    let mean = terms.iter().sum::<f64>() / num_projections as f64;
    Ok(TransportPlanResult {
        distance: mean.powf(1.0 / p),
        iterations_used: num_projections,
        converged: true,
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_are_unit_vectors() {
        let d = random_directions(3, 100, 5);
        for v in d.chunks(3) {
            let n: f64 = v.iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_sets_are_at_zero() {
        let k = ExplanationKind::Attribution(2);
        let a = ExplanationSet::new(k, vec![0.0, 1.0, 2.0, 3.0, -1.0, 0.5]).unwrap();
        let r = sliced_wasserstein(&a, &a, 2.0, 50, 9).unwrap();
        assert_eq!(r.distance, 0.0);
    }

    #[test]
    fn one_dimensional_reduces_to_exact_line_distance() {
        let k = ExplanationKind::Attribution(1);
        let a = ExplanationSet::new(k, vec![0.0, 1.0, 2.0]).unwrap();
        let b = ExplanationSet::new(k, vec![5.0, 3.0, 9.0]).unwrap();
        for p in [1.0, 2.0, 3.0] {
            let exact = super::super::wasserstein_1d(a.data(), b.data(), p).unwrap();
            let sliced = sliced_wasserstein(&a, &b, p, 7, 1).unwrap().distance;
            assert!((exact - sliced).abs() < 1e-12, "p={p}: {exact} vs {sliced}");
        }
    }
}

use crate::error::{Error, Result};
use crate::spaces::{DistanceSpec, ExplanationSet};

use super::{check_pair, cost_matrix, SolverMethod, TransportPlanResult};

/// Largest measure size the exact solver accepts.
pub const EXACT_CAP: usize = 512;

/// Minimum-cost perfect matching on a square row-major cost matrix.
///
/// Shortest-augmenting-path Hungarian method with row/column potentials,
/// `O(n³)`. Returns `(total cost, assignment)` where `assignment[i]` is the
/// column matched to row `i`.
pub fn min_cost_assignment(cost: &[f64], n: usize) -> (f64, Vec<usize>) {
    assert_eq!(cost.len(), n * n, "cost matrix must be n × n");
    if n == 0 {
        return (0.0, Vec::new());
    }
    // 1-based potentials; column 0 is a virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut min_slack = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0;
        min_slack.iter_mut().for_each(|x| *x = f64::INFINITY);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let row = &cost[(i0 - 1) * n..i0 * n];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - u[i0] - v[j];
                if cur < min_slack[j] {
                    min_slack[j] = cur;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[matched_row[j] - 1] = j - 1;
    }
    let total = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i * n + j])
        .sum();
    (total, assignment)
}

/// Exact p-Wasserstein distance between two equal-weight measures of the same
/// size, by optimal assignment on the matrix of `d(a_i, b_j)^p`.
pub fn wasserstein_exact(
    a: &ExplanationSet,
    b: &ExplanationSet,
    spec: &DistanceSpec,
) -> Result<TransportPlanResult> {
    spec.check_kind(a.kind())?;
    check_pair(a, b)?;
    let n = a.len();
    if n > EXACT_CAP {
        return Err(Error::TooLarge { n, cap: EXACT_CAP });
    }
    let rows_a: Vec<&[f64]> = a.rows().collect();
    let rows_b: Vec<&[f64]> = b.rows().collect();
    let cost = cost_matrix(&rows_a, &rows_b, spec.metric, spec.p);
    let (total, _) = min_cost_assignment(&cost, n);
    let mean = (total / n as f64).max(0.0);
    Ok(TransportPlanResult {
        distance: mean.powf(1.0 / spec.p),
        iterations_used: n,
        converged: true,
        method: SolverMethod::ExactAssignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{ExplanationKind, Metric};

    #[test]
    fn small_known_assignment() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let (total, asg) = min_cost_assignment(&cost, 3);
        assert_eq!(total, 5.0);
        assert_eq!(asg, vec![1, 0, 2]);
    }

    #[test]
    fn identical_sets_have_zero_distance() {
        let k = ExplanationKind::Attribution(2);
        let a = ExplanationSet::from_rows(k, &[[0.0, 1.0], [2.0, -1.0], [0.5, 0.5]]).unwrap();
        let r = wasserstein_exact(&a, &a, &DistanceSpec::new(Metric::Euclidean)).unwrap();
        assert_eq!(r.distance, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn two_diracs() {
        let k = ExplanationKind::Attribution(2);
        let a = ExplanationSet::from_rows(k, &[[0.0, 0.0]]).unwrap();
        let b = ExplanationSet::from_rows(k, &[[3.0, 4.0]]).unwrap();
        let r = wasserstein_exact(&a, &b, &DistanceSpec::new(Metric::Euclidean)).unwrap();
        assert!((r.distance - 5.0).abs() < 1e-12);
    }

    #[test]
    fn refuses_oversized_problems() {
        let k = ExplanationKind::Attribution(1);
        let a = ExplanationSet::new(k, vec![0.0; EXACT_CAP + 1]).unwrap();
        let err = wasserstein_exact(&a, &a, &DistanceSpec::new(Metric::Euclidean)).unwrap_err();
        assert!(matches!(err, Error::TooLarge { .. }));
        assert!(err.to_string().contains("sliced"));
    }
}

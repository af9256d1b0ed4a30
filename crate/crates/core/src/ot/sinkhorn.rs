use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::Result;
use crate::spaces::{DistanceSpec, ExplanationSet, Metric};

use super::{check_pair, cost_matrix, SolverMethod, TransportPlanResult};

/// Collapse duplicate rows into weighted atoms, keeping first-seen order.
fn atoms(set: &ExplanationSet) -> (Vec<&[f64]>, Vec<f64>) {
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut rows = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let unit = 1.0 / set.len() as f64;
    for row in set.rows() {
        let key: Vec<u64> = row.iter().map(|x| (x + 0.0).to_bits()).collect();
        match index.get(&key) {
            Some(&i) => weights[i] += unit,
            None => {
                index.insert(key, rows.len());
                rows.push(row);
                weights.push(unit);
            }
        }
    }
    (rows, weights)
}

/// Entropic-regularized transport cost between two equal-weight measures.
///
/// The plan minimizes `⟨R, D^p⟩ − H(R)/lambda` and is computed by alternating
/// log-domain scaling updates; `lambda` is the inverse regularization, so the
/// plan approaches the unregularized optimum as it grows. Duplicate rows are
/// merged into weighted atoms first, which leaves the optimal cost unchanged.
///
/// The reported distance is `⟨R, D^p⟩^(1/p)` under the final plan.
/// `converged` is true iff the L1 row-marginal error fell below `tol`
/// within `max_iter` iterations; otherwise the last iterate is returned.
pub fn sinkhorn(
    a: &ExplanationSet,
    b: &ExplanationSet,
    spec: &DistanceSpec,
    lambda: f64,
    max_iter: usize,
    tol: f64,
) -> Result<TransportPlanResult> {
    let method = SolverMethod::Sinkhorn {
        lambda,
        max_iter,
        tol,
    };
    method.validate()?;
    spec.check_kind(a.kind())?;
    check_pair(a, b)?;
    let (xs, wa) = atoms(a);
    let (ys, wb) = atoms(b);
    let (cost, iterations_used, converged) =
        sinkhorn_weighted(&xs, &wa, &ys, &wb, spec.metric, spec.p, lambda, max_iter, tol);
    Ok(TransportPlanResult {
        distance: cost.max(0.0).powf(1.0 / spec.p),
        iterations_used,
        converged,
        method,
    })
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Log-domain Sinkhorn on weighted atoms. Returns `(⟨R, C⟩, iterations, converged)`
/// where `C = d^p`.
#[allow(clippy::too_many_arguments)]
pub fn sinkhorn_weighted(
    xs: &[&[f64]],
    wa: &[f64],
    ys: &[&[f64]],
    wb: &[f64],
    metric: Metric,
    p: f64,
    lambda: f64,
    max_iter: usize,
    tol: f64,
) -> (f64, usize, bool) {
    let n = xs.len();
    let m = ys.len();
    let eps = 1.0 / lambda;
    let cost = cost_matrix(xs, ys, metric, p);
    let cost_t = {
        let mut t = vec![0.0; n * m];
        for i in 0..n {
            for j in 0..m {
                t[j * n + i] = cost[i * m + j];
            }
        }
        t
    };
    let log_a: Vec<f64> = wa.iter().map(|w| w.ln()).collect();
    let log_b: Vec<f64> = wb.iter().map(|w| w.ln()).collect();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=max_iter {
        iterations = it;
        f.par_iter_mut().enumerate().for_each(|(i, fi)| {
            let row = &cost[i * m..(i + 1) * m];
            let lse = log_sum_exp(row.iter().zip(&g).map(|(c, gj)| (gj - c) / eps));
            *fi = eps * (log_a[i] - lse);
        });
        g.par_iter_mut().enumerate().for_each(|(j, gj)| {
            let col = &cost_t[j * n..(j + 1) * n];
            let lse = log_sum_exp(col.iter().zip(&f).map(|(c, fi)| (fi - c) / eps));
            *gj = eps * (log_b[j] - lse);
        });
        // columns are exact after the g-update; measure the row marginals
        let err: f64 = (0..n)
            .into_par_iter()
            .map(|i| {
                let row = &cost[i * m..(i + 1) * m];
                let mass: f64 = row
                    .iter()
                    .zip(&g)
                    .map(|(c, gj)| ((f[i] + gj - c) / eps).exp())
                    .sum();
                (mass - wa[i]).abs()
            })
            .collect::<Vec<_>>()
            .iter()
            .sum();
        if err < tol {
            converged = true;
            break;
        }
    }

    let transport: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = &cost[i * m..(i + 1) * m];
            row.iter()
                .zip(&g)
                .map(|(c, gj)| ((f[i] + gj - c) / eps).exp() * c)
                .sum::<f64>()
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    (transport, iterations, converged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::ExplanationKind;

    #[test]
    fn duplicates_collapse_to_weighted_atoms() {
        let set = ExplanationSet::from_rows(
            ExplanationKind::Selection(2),
            &[[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 0.0]],
        )
        .unwrap();
        let (rows, w) = atoms(&set);
        assert_eq!(rows.len(), 2);
        assert_eq!(w, vec![0.75, 0.25]);
    }

    #[test]
    fn dirac_against_anything_converges_immediately() {
        let k = ExplanationKind::Selection(3);
        let dirac = ExplanationSet::repeated(k, &[0.0, 0.0, 0.0], 4).unwrap();
        let other = ExplanationSet::from_rows(
            k,
            &[[1.0, 1.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]],
        )
        .unwrap();
        let r = sinkhorn(&dirac, &other, &DistanceSpec::for_kind(k), 10.0, 50, 1e-9).unwrap();
        assert!(r.converged);
        assert!((r.distance - 1.25).abs() < 1e-9);
    }

    #[test]
    fn non_convergence_is_reported_not_raised() {
        let k = ExplanationKind::Attribution(1);
        let a = ExplanationSet::new(k, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let b = ExplanationSet::new(k, vec![0.5, 1.5, 2.5, 10.0]).unwrap();
        let r = sinkhorn(&a, &b, &DistanceSpec::for_kind(k), 1000.0, 1, 1e-15).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations_used, 1);
        assert!(r.distance.is_finite());
    }
}

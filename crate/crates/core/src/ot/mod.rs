//! Wasserstein distances between equal-size, equal-weight empirical measures.
//!
//! Four routes are provided:
//!
//! - [`wasserstein_1d`]: closed form on the line via order statistics.
//! - [`wasserstein_exact`]: optimal assignment on the `N × N` cost matrix,
//!   exact for any ground metric; capped at [`EXACT_CAP`] points.
//! - [`sinkhorn`]: entropic regularization solved by log-domain scaling.
//! - [`sliced_wasserstein`]: average of 1-D distances over random directions.

mod assignment;
mod one_d;
mod sinkhorn;
mod sliced;

use serde::{Deserialize, Serialize};

pub use assignment::{min_cost_assignment, wasserstein_exact, EXACT_CAP};
pub use one_d::wasserstein_1d;
pub use sinkhorn::{sinkhorn, sinkhorn_weighted};
pub use sliced::{random_directions, sliced_wasserstein};

use crate::error::{Error, Result};
use crate::spaces::{DistanceSpec, ExplanationKind, ExplanationSet, Metric};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SolverMethod {
    /// Sorted matching on the line; one-dimensional attributions only.
    #[serde(rename = "exact1d")]
    Exact1D,
    #[serde(rename = "exact")]
    ExactAssignment,
    /// `lambda` is the inverse regularization strength: larger values give
    /// plans closer to the unregularized optimum.
    Sinkhorn {
        lambda: f64,
        max_iter: usize,
        tol: f64,
    },
    /// Projection directions are drawn from the seed handed to [`solve`].
    Sliced { num_projections: usize },
}

impl SolverMethod {
    pub const DEFAULT_PROJECTIONS: usize = 500;
    pub const DEFAULT_LAMBDA: f64 = 10.0;
    pub const DEFAULT_MAX_ITER: usize = 2000;
    pub const DEFAULT_TOL: f64 = 1e-6;

    pub fn sliced() -> Self {
        SolverMethod::Sliced {
            num_projections: Self::DEFAULT_PROJECTIONS,
        }
    }

    pub fn sinkhorn(lambda: f64) -> Self {
        SolverMethod::Sinkhorn {
            lambda,
            max_iter: Self::DEFAULT_MAX_ITER,
            tol: Self::DEFAULT_TOL,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SolverMethod::Exact1D => "exact1d",
            SolverMethod::ExactAssignment => "exact",
            SolverMethod::Sinkhorn { .. } => "sinkhorn",
            SolverMethod::Sliced { .. } => "sliced",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SolverMethod::Exact1D | SolverMethod::ExactAssignment => Ok(()),
            SolverMethod::Sinkhorn {
                lambda,
                max_iter,
                tol,
            } => {
                if !(lambda.is_finite() && lambda > 0.0) {
                    return Err(Error::config(format!("sinkhorn lambda must be > 0, got {lambda}")));
                }
                if max_iter == 0 {
                    return Err(Error::config("sinkhorn max_iter must be >= 1"));
                }
                if !(tol.is_finite() && tol > 0.0) {
                    return Err(Error::config(format!("sinkhorn tol must be > 0, got {tol}")));
                }
                Ok(())
            }
            SolverMethod::Sliced { num_projections } => {
                if num_projections == 0 {
                    return Err(Error::config("sliced solver needs at least one projection"));
                }
                Ok(())
            }
        }
    }
}

/// Solver choice; the Wasserstein order lives in the space's [`DistanceSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    #[serde(flatten)]
    pub method: SolverMethod,
}

impl SolverConfig {
    pub fn new(method: SolverMethod) -> Self {
        SolverConfig { method }
    }

    /// Sliced for attributions, Sinkhorn for selections and rankings.
    pub fn default_for(kind: ExplanationKind) -> Self {
        match kind {
            ExplanationKind::Attribution(_) => SolverConfig::new(SolverMethod::sliced()),
            ExplanationKind::Selection(_) | ExplanationKind::Ranking(_) => {
                SolverConfig::new(SolverMethod::sinkhorn(SolverMethod::DEFAULT_LAMBDA))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportPlanResult {
    pub distance: f64,
    pub iterations_used: usize,
    pub converged: bool,
    pub method: SolverMethod,
}

pub(crate) fn check_pair(a: &ExplanationSet, b: &ExplanationSet) -> Result<()> {
    if a.kind() != b.kind() {
        return Err(Error::config(format!(
            "measures live in different spaces: {} vs {}",
            a.kind(),
            b.kind()
        )));
    }
    if a.len() != b.len() {
        return Err(Error::config(format!(
            "equal sample counts required, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Dispatch to the configured solver. `seed` drives the sliced projections.
pub fn solve(
    a: &ExplanationSet,
    b: &ExplanationSet,
    spec: &DistanceSpec,
    method: &SolverMethod,
    seed: u64,
) -> Result<TransportPlanResult> {
    method.validate()?;
    spec.check_kind(a.kind())?;
    check_pair(a, b)?;
    match *method {
        SolverMethod::Exact1D => {
            if a.dim() != 1 || spec.metric != Metric::Euclidean {
                return Err(Error::config(
                    "exact1d solver needs one-dimensional attributions",
                ));
            }
            Ok(TransportPlanResult {
                distance: wasserstein_1d(a.data(), b.data(), spec.p)?,
                iterations_used: 1,
                converged: true,
                method: *method,
            })
        }
        SolverMethod::ExactAssignment => wasserstein_exact(a, b, spec),
        SolverMethod::Sinkhorn {
            lambda,
            max_iter,
            tol,
        } => sinkhorn(a, b, spec, lambda, max_iter, tol),
        SolverMethod::Sliced { num_projections } => {
            if spec.metric != Metric::Euclidean {
                return Err(Error::config(
                    "sliced solver needs Euclidean attributions; use sinkhorn or exact",
                ));
            }
            sliced_wasserstein(a, b, spec.p, num_projections, seed)
        }
    }
}

/// `N × M` matrix of `d(a_i, b_j)^p`, row-major.
pub(crate) fn cost_matrix(a: &[&[f64]], b: &[&[f64]], metric: Metric, p: f64) -> Vec<f64> {
    use rayon::prelude::*;
    let m = b.len();
    let mut cost = vec![0.0; a.len() * m];
    cost.par_chunks_mut(m.max(1))
        .zip(a.par_iter())
        .for_each(|(row, x)| {
            for (c, y) in row.iter_mut().zip(b) {
                *c = pow_p(metric.eval(x, y), p);
            }
        });
    cost
}

#[inline]
pub(crate) fn pow_p(d: f64, p: f64) -> f64 {
    if p == 1.0 {
        d
    } else if p == 2.0 {
        d * d
    } else {
        d.powf(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solver_validation() {
        assert!(SolverMethod::Sinkhorn { lambda: 0.0, max_iter: 1, tol: 1e-3 }.validate().is_err());
        assert!(SolverMethod::Sinkhorn { lambda: 1.0, max_iter: 0, tol: 1e-3 }.validate().is_err());
        assert!(SolverMethod::Sinkhorn { lambda: 1.0, max_iter: 1, tol: 0.0 }.validate().is_err());
        assert!(SolverMethod::Sliced { num_projections: 0 }.validate().is_err());
        assert!(SolverMethod::sliced().validate().is_ok());
    }

    #[test]
    fn sliced_rejects_discrete_spaces() {
        let a = ExplanationSet::from_rows(ExplanationKind::Selection(2), &[[1.0, 0.0]]).unwrap();
        let spec = DistanceSpec::for_kind(a.kind());
        let err = solve(&a, &a, &spec, &SolverMethod::sliced(), 0).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn unequal_counts_rejected() {
        let k = ExplanationKind::Attribution(1);
        let a = ExplanationSet::from_rows(k, &[[0.0], [1.0]]).unwrap();
        let b = ExplanationSet::from_rows(k, &[[0.0]]).unwrap();
        let spec = DistanceSpec::for_kind(k);
        assert!(solve(&a, &b, &spec, &SolverMethod::ExactAssignment, 0).is_err());
    }
}

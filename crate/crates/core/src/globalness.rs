//! Wasserstein globalness: the distance between the centered explanation
//! distribution and the uniform baseline, normalized by the same quantity for
//! a point mass.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{center, estimate_radius_k, Baseline};
use crate::error::{Error, Result};
use crate::ot::{solve, SolverConfig, TransportPlanResult};
use crate::rng::{derive_seed, Stream};
use crate::spaces::{DistanceSpec, ExplanationKind, ExplanationSet};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Centering {
    /// Subtract the empirical mean (attributions).
    Mean,
    Identity,
}

/// A metric space with its baseline distribution and centering rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceConfig {
    pub kind: ExplanationKind,
    pub distance: DistanceSpec,
    pub baseline: Baseline,
    pub centering: Centering,
}

impl SpaceConfig {
    /// ℝ^dim with Euclidean distance and a uniform ball of radius `k`.
    pub fn attribution(dim: usize, k: f64) -> Result<Self> {
        let kind = ExplanationKind::Attribution(dim);
        Self::new(kind, DistanceSpec::for_kind(kind), Some(k))
    }

    pub fn selection(dim: usize) -> Result<Self> {
        let kind = ExplanationKind::Selection(dim);
        Self::new(kind, DistanceSpec::for_kind(kind), None)
    }

    pub fn ranking(dim: usize) -> Result<Self> {
        let kind = ExplanationKind::Ranking(dim);
        Self::new(kind, DistanceSpec::for_kind(kind), None)
    }

    /// The standard pairing for `kind`. `radius` is required for attributions.
    pub fn new(kind: ExplanationKind, distance: DistanceSpec, radius: Option<f64>) -> Result<Self> {
        let cfg = SpaceConfig {
            kind,
            distance,
            baseline: Baseline::for_kind(kind, radius)?,
            centering: match kind {
                ExplanationKind::Attribution(_) => Centering::Mean,
                _ => Centering::Identity,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Attribution space whose radius is estimated from the centered sets.
    pub fn attribution_fitted(sets: &[&ExplanationSet]) -> Result<Self> {
        let centered: Vec<ExplanationSet> = sets.iter().map(|s| center(s)).collect();
        let refs: Vec<&ExplanationSet> = centered.iter().collect();
        let k = estimate_radius_k(&refs)?;
        Self::attribution(sets[0].dim(), k)
    }

    pub fn with_p(mut self, p: f64) -> Result<Self> {
        self.distance.p = p;
        self.validate()?;
        Ok(self)
    }

    pub fn radius(&self) -> Option<f64> {
        match self.baseline {
            Baseline::UniformBall { radius, .. } => Some(radius),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.distance.check_kind(self.kind)?;
        self.baseline.validate()?;
        if self.baseline.kind() != self.kind {
            return Err(Error::config(format!(
                "baseline {:?} does not live on {}",
                self.baseline, self.kind
            )));
        }
        let expected = match self.kind {
            ExplanationKind::Attribution(_) => Centering::Mean,
            _ => Centering::Identity,
        };
        if self.centering != expected {
            return Err(Error::config(format!(
                "{} explanations use {:?} centering",
                self.kind.name(),
                expected
            )));
        }
        Ok(())
    }

    fn apply_centering(&self, set: &ExplanationSet) -> ExplanationSet {
        match self.centering {
            Centering::Mean => center(set),
            Centering::Identity => set.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalnessReport {
    pub raw_wg: f64,
    pub dirac_normalizer: f64,
    /// `raw_wg / dirac_normalizer`; not clamped, so Monte Carlo noise can
    /// push it slightly above 1.
    pub normalized_wg: f64,
    pub n: usize,
    pub space: SpaceConfig,
    pub solver: SolverConfig,
    pub seed: u64,
    pub converged: bool,
    pub iterations_used: usize,
}

/// Unnormalized globalness: center the set, draw `N` baseline points and
/// return the solver's distance between the two empirical measures.
pub fn wg_raw(
    set: &ExplanationSet,
    space: &SpaceConfig,
    solver: &SolverConfig,
    seed: u64,
) -> Result<TransportPlanResult> {
    space.validate()?;
    if set.kind() != space.kind {
        return Err(Error::config(format!(
            "explanations are {} but the space is {}",
            set.kind(),
            space.kind
        )));
    }
    let centered = space.apply_centering(set);
    let base = space
        .baseline
        .sample(set.len(), derive_seed(seed, Stream::Baseline))?;
    solve(
        &centered,
        &base,
        &space.distance,
        &solver.method,
        derive_seed(seed, Stream::Projections),
    )
}

/// Globalness of the centered point mass, computed through the same solver,
/// baseline sample and projections as [`wg_raw`] with the same seed.
pub fn dirac_normalizer(
    space: &SpaceConfig,
    solver: &SolverConfig,
    n: usize,
    seed: u64,
) -> Result<TransportPlanResult> {
    let dirac = ExplanationSet::repeated(space.kind, &space.baseline.dirac_point(), n)?;
    wg_raw(&dirac, space, solver, seed)
}

pub fn wg(
    set: &ExplanationSet,
    space: &SpaceConfig,
    solver: &SolverConfig,
    seed: u64,
) -> Result<GlobalnessReport> {
    let raw = wg_raw(set, space, solver, seed)?;
    let norm = dirac_normalizer(space, solver, set.len(), seed)?;
    if norm.distance.is_nan() || norm.distance <= 0.0 {
        return Err(Error::config(
            "Dirac normalizer is zero; the baseline has no spread",
        ));
    }
    Ok(GlobalnessReport {
        raw_wg: raw.distance,
        dirac_normalizer: norm.distance,
        normalized_wg: raw.distance / norm.distance,
        n: set.len(),
        space: *space,
        solver: *solver,
        seed,
        converged: raw.converged && norm.converged,
        iterations_used: raw.iterations_used,
    })
}

/// Score several sets against one shared baseline.
///
/// For attributions the ball radius is estimated jointly over all centered
/// sets, so every set is compared to the same reference measure.
pub fn wg_shared(
    sets: &[&ExplanationSet],
    solver: &SolverConfig,
    p: Option<f64>,
    seed: u64,
) -> Result<Vec<GlobalnessReport>> {
    let first = sets
        .first()
        .ok_or_else(|| Error::config("need at least one explanation set"))?;
    let kind = first.kind();
    if let Some(bad) = sets.iter().find(|s| s.kind() != kind) {
        return Err(Error::config(format!(
            "all sets must share one space: {} vs {}",
            kind,
            bad.kind()
        )));
    }
    let mut space = match kind {
        ExplanationKind::Attribution(_) => SpaceConfig::attribution_fitted(sets)?,
        _ => SpaceConfig::new(kind, DistanceSpec::for_kind(kind), None)?,
    };
    if let Some(p) = p {
        space = space.with_p(p)?;
    }
    sets.iter().map(|s| wg(s, &space, solver, seed)).collect()
}

/// Where the reference value of a convergence curve comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveReference {
    /// A known population value (e.g. an analytic oracle).
    Value(f64),
    /// Mean over `repeats` evaluations at this many samples.
    LargeSample { n: usize, repeats: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub mean_abs_deviation: f64,
    pub std_err: f64,
    pub mean_wg: f64,
}

/// Mean absolute deviation of the raw estimate from a reference, per sample
/// size. `sampler(n, seed)` draws `n` explanations.
pub fn convergence_curve<F>(
    sampler: F,
    space: &SpaceConfig,
    solver: &SolverConfig,
    n_list: &[usize],
    repeats: usize,
    reference: CurveReference,
    seed: u64,
) -> Result<(f64, Vec<CurvePoint>)>
where
    F: Fn(usize, u64) -> Result<ExplanationSet> + Sync,
{
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("sample sizes must be strictly ascending"));
    }
    if repeats == 0 {
        return Err(Error::config("need at least one repeat"));
    }
    let estimate = |n: usize, r: u64| -> Result<f64> {
        let s = derive_seed(seed ^ (n as u64).wrapping_mul(0x100_0193), Stream::Repeat(r));
        let set = sampler(n, derive_seed(s, Stream::Data))?;
        Ok(wg_raw(&set, space, solver, s)?.distance)
    };
    let reference_value = match reference {
        CurveReference::Value(v) => v,
        CurveReference::LargeSample { n, repeats } => {
            let vals: Result<Vec<f64>> = (0..repeats as u64)
                .into_par_iter()
                .map(|r| estimate(n, 1_000_000 + r))
                .collect();
            stats::mean(&vals?)
        }
    };
    let mut points = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let vals: Result<Vec<f64>> = (0..repeats as u64)
            .into_par_iter()
            .map(|r| estimate(n, r))
            .collect();
        let vals = vals?;
        let devs: Vec<f64> = vals.iter().map(|v| (v - reference_value).abs()).collect();
        points.push(CurvePoint {
            n,
            mean_abs_deviation: stats::mean(&devs),
            std_err: stats::std_err(&devs),
            mean_wg: stats::mean(&vals),
        });
    }
    Ok((reference_value, points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot::SolverMethod;

    #[test]
    fn space_pairings_are_enforced() {
        assert!(SpaceConfig::attribution(2, 1.0).is_ok());
        assert!(SpaceConfig::attribution(2, 0.0).is_err());
        let mut cfg = SpaceConfig::selection(3).unwrap();
        cfg.centering = Centering::Mean;
        assert!(cfg.validate().is_err());
        let mut cfg = SpaceConfig::ranking(3).unwrap();
        cfg.baseline = Baseline::UniformHypercube { dim: 3 };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn dirac_scores_one_by_construction() {
        let space = SpaceConfig::selection(4).unwrap();
        let solver = SolverConfig::default_for(space.kind);
        let set = ExplanationSet::repeated(space.kind, &[1.0, 0.0, 1.0, 1.0], 300).unwrap();
        let r = wg(&set, &space, &solver, 3).unwrap();
        // any vertex is equivalent to the all-zeros vertex under the uniform cube
        assert!((r.normalized_wg - 1.0).abs() < 0.1, "{}", r.normalized_wg);
        let zero = ExplanationSet::repeated(space.kind, &[0.0; 4], 300).unwrap();
        let r = wg(&zero, &space, &solver, 3).unwrap();
        assert_eq!(r.normalized_wg, 1.0);
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let space = SpaceConfig::selection(2).unwrap();
        let set = ExplanationSet::new(ExplanationKind::Attribution(2), vec![0.0, 1.0]).unwrap();
        let solver = SolverConfig::new(SolverMethod::ExactAssignment);
        assert!(matches!(wg_raw(&set, &space, &solver, 0), Err(Error::Config(_))));
    }

    #[test]
    fn shared_radius_rejects_mixed_kinds() {
        let a = ExplanationSet::new(ExplanationKind::Attribution(2), vec![0.0, 1.0]).unwrap();
        let b = ExplanationSet::new(ExplanationKind::Selection(2), vec![0.0, 1.0]).unwrap();
        let solver = SolverConfig::new(SolverMethod::ExactAssignment);
        assert!(wg_shared(&[&a, &b], &solver, None, 0).is_err());
    }
}

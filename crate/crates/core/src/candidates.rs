//! Density-based rivals to Wasserstein globalness (differential entropy, KL
//! divergence and total variation to the uniform baseline) and the study that
//! shows which of them respect distance-preserving maps.
//!
//! All candidates are evaluated on analytic densities by Monte Carlo, never on
//! density estimates from samples.

use std::f64::consts::PI;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::Baseline;
use crate::error::Result;
use crate::globalness::{wg, SpaceConfig};
use crate::ot::{SolverConfig, SolverMethod};
use crate::rng::{derive_seed, rng_from_seed, Rng, Stream};
use crate::spaces::{ExplanationKind, ExplanationSet};
use crate::stats;
use crate::synth::GaussianMixture1D;

/// A probability density on ℝ with a sampler.
pub trait Density1D: Sync {
    fn density(&self, x: f64) -> f64;
    /// Interval outside which the density is (numerically) zero.
    fn support(&self) -> (f64, f64);
    fn draw(&self, rng: &mut Rng) -> f64;
}

/// Uniform density on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform1D {
    pub lo: f64,
    pub hi: f64,
}

impl Density1D for Uniform1D {
    fn density(&self, x: f64) -> f64 {
        if x >= self.lo && x <= self.hi {
            1.0 / (self.hi - self.lo)
        } else {
            0.0
        }
    }

    fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn draw(&self, rng: &mut Rng) -> f64 {
        self.lo + (self.hi - self.lo) * rng.random::<f64>()
    }
}

/// Component tails beyond this many standard deviations are treated as
/// outside the support (their mass is below 1e-15).
const SUPPORT_SIGMAS: f64 = 8.0;

impl Density1D for GaussianMixture1D {
    fn density(&self, x: f64) -> f64 {
        GaussianMixture1D::density(self, x)
    }

    fn support(&self) -> (f64, f64) {
        let lo = self
            .components
            .iter()
            .map(|&(_, m, s)| m - SUPPORT_SIGMAS * s)
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .components
            .iter()
            .map(|&(_, m, s)| m + SUPPORT_SIGMAS * s)
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    fn draw(&self, rng: &mut Rng) -> f64 {
        GaussianMixture1D::draw(self, rng)
    }
}

impl GaussianMixture1D {
    pub fn normal(mean: f64, std: f64) -> Self {
        GaussianMixture1D {
            components: vec![(1.0, mean, std)],
        }
    }
}

/// Bijections of the real line used by the transformation study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Transform1D {
    Identity,
    Reflect { about: f64 },
    Translate { by: f64 },
    Scale { factor: f64, about: f64 },
    /// Exchange `[a, a+len)` with `[b, b+len)`; identity elsewhere. Preserves
    /// Lebesgue measure but not distances.
    SwapIntervals { a: f64, b: f64, len: f64 },
}

impl Transform1D {
    pub fn forward(&self, x: f64) -> f64 {
        match *self {
            Transform1D::Identity => x,
            Transform1D::Reflect { about } => 2.0 * about - x,
            Transform1D::Translate { by } => x + by,
            Transform1D::Scale { factor, about } => about + factor * (x - about),
            Transform1D::SwapIntervals { a, b, len } => {
                if x >= a && x < a + len {
                    x - a + b
                } else if x >= b && x < b + len {
                    x - b + a
                } else {
                    x
                }
            }
        }
    }

    pub fn inverse(&self, y: f64) -> f64 {
        match *self {
            Transform1D::Scale { factor, about } => about + (y - about) / factor,
            Transform1D::Translate { by } => y - by,
            // reflections and swaps are involutions
            other => other.forward(y),
        }
    }

    /// `|d T⁻¹ / dy|`, constant for every map here.
    pub fn inverse_jacobian(&self) -> f64 {
        match *self {
            Transform1D::Scale { factor, .. } => 1.0 / factor.abs(),
            _ => 1.0,
        }
    }

    pub fn is_isometry(&self) -> bool {
        match *self {
            Transform1D::Identity | Transform1D::Reflect { .. } | Transform1D::Translate { .. } => true,
            Transform1D::Scale { factor, .. } => factor.abs() == 1.0,
            Transform1D::SwapIntervals { len, .. } => len == 0.0,
        }
    }

    fn map_interval(&self, (lo, hi): (f64, f64)) -> (f64, f64) {
        match *self {
            Transform1D::SwapIntervals { a, b, len } => {
                let mut out_lo = lo;
                let mut out_hi = hi;
                for (src, dst) in [(a, b), (b, a)] {
                    let s_lo = src.max(lo);
                    let s_hi = (src + len).min(hi);
                    if s_lo < s_hi {
                        out_lo = out_lo.min(s_lo - src + dst);
                        out_hi = out_hi.max(s_hi - src + dst);
                    }
                }
                (out_lo, out_hi)
            }
            _ => {
                let (p, q) = (self.forward(lo), self.forward(hi));
                (p.min(q), p.max(q))
            }
        }
    }
}

/// Push-forward of a density through a bijection.
pub struct PushForward<'a, D: Density1D> {
    pub base: &'a D,
    pub map: Transform1D,
}

impl<D: Density1D> Density1D for PushForward<'_, D> {
    fn density(&self, y: f64) -> f64 {
        self.base.density(self.map.inverse(y)) * self.map.inverse_jacobian()
    }

    fn support(&self) -> (f64, f64) {
        self.map.map_interval(self.base.support())
    }

    fn draw(&self, rng: &mut Rng) -> f64 {
        self.map.forward(self.base.draw(rng))
    }
}

/// Trapezoid-rule integral of a density over its support.
pub fn integrate(d: &dyn Density1D, points: usize) -> f64 {
    let (lo, hi) = d.support();
    let h = (hi - lo) / (points - 1) as f64;
    let mut acc = 0.5 * (d.density(lo) + d.density(hi));
    for i in 1..points - 1 {
        acc += d.density(lo + i as f64 * h);
    }
    acc * h
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_err: f64,
    pub samples: usize,
    /// Samples dropped because the density vanished there.
    pub excluded: usize,
}

impl McEstimate {
    fn from_terms(terms: &[f64], excluded: usize) -> Self {
        McEstimate {
            value: stats::mean(terms),
            std_err: stats::std_err(terms),
            samples: terms.len(),
            excluded,
        }
    }
}

/// Outcome of a divergence whose value may not exist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Divergence {
    Defined(McEstimate),
    Undefined { reason: String },
}

impl Divergence {
    pub fn value(&self) -> Option<f64> {
        match self {
            Divergence::Defined(e) => Some(e.value),
            Divergence::Undefined { .. } => None,
        }
    }
}

/// Monte Carlo differential entropy `E_{X∼ν}[−ln ν(X)]`.
pub fn entropy_mc(d: &dyn Density1D, num_samples: usize, seed: u64) -> McEstimate {
    let mut rng = rng_from_seed(seed);
    let mut terms = Vec::with_capacity(num_samples);
    let mut excluded = 0;
    for _ in 0..num_samples {
        let x = d.draw(&mut rng);
        let p = d.density(x);
        if p > 0.0 {
            terms.push(-p.ln());
        } else {
            excluded += 1;
        }
    }
    McEstimate::from_terms(&terms, excluded)
}

/// Monte Carlo `D_KL(ν‖u) = E_{X∼u}[f(ν(X)/u(X))]` with `f(t) = t ln t`.
///
/// Undefined when ν puts mass outside the support of `u`.
pub fn kl_mc(nu: &dyn Density1D, u: &dyn Density1D, num_samples: usize, seed: u64) -> Divergence {
    let (nlo, nhi) = nu.support();
    let (ulo, uhi) = u.support();
    if nlo < ulo || nhi > uhi {
        return Divergence::Undefined {
            reason: format!(
                "support [{nlo:.3}, {nhi:.3}] of ν is not contained in [{ulo:.3}, {uhi:.3}]"
            ),
        };
    }
    let mut rng = rng_from_seed(seed);
    let terms: Vec<f64> = (0..num_samples)
        .map(|_| {
            let x = u.draw(&mut rng);
            let t = nu.density(x) / u.density(x);
            if t > 0.0 {
                t * t.ln()
            } else {
                0.0
            }
        })
        .collect();
    Divergence::Defined(McEstimate::from_terms(&terms, 0))
}

/// Monte Carlo total variation `½∫|ν − u|`.
///
/// Samples come from the equal mixture `m = ½u + ½ν`, so mass of ν outside the
/// support of `u` is accounted for; every term lies in `[0, 1]`.
pub fn tv_mc(nu: &dyn Density1D, u: &dyn Density1D, num_samples: usize, seed: u64) -> McEstimate {
    let mut rng = rng_from_seed(seed);
    let terms: Vec<f64> = (0..num_samples)
        .map(|_| {
            let x = if rng.random::<bool>() {
                u.draw(&mut rng)
            } else {
                nu.draw(&mut rng)
            };
            let (pu, pn) = (u.density(x), nu.density(x));
            let m = 0.5 * (pu + pn);
            if m > 0.0 {
                0.5 * (pu - pn).abs() / m
            } else {
                0.0
            }
        })
        .collect();
    McEstimate::from_terms(&terms, 0)
}

/// A globalness candidate evaluated in the transformation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Wg,
    Entropy,
    Kl,
    Tv,
}

impl Measure {
    pub const ALL: [Measure; 4] = [Measure::Wg, Measure::Entropy, Measure::Kl, Measure::Tv];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Wg => "wg",
            Measure::Entropy => "entropy",
            Measure::Kl => "kl",
            Measure::Tv => "tv",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Measure::ALL.into_iter().find(|m| m.name() == name)
    }
}

/// A named transformation of the study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NamedTransform {
    pub name: &'static str,
    pub map: Transform1D,
}

/// Original, two isometries, two scalings (one pushing mass out of
/// `[−30, 30]`) and a measure-preserving interval swap.
pub fn study_transforms() -> Vec<NamedTransform> {
    vec![
        NamedTransform { name: "original", map: Transform1D::Identity },
        NamedTransform { name: "reflect", map: Transform1D::Reflect { about: 0.0 } },
        NamedTransform { name: "translate", map: Transform1D::Translate { by: 5.0 } },
        NamedTransform { name: "scale_half", map: Transform1D::Scale { factor: 0.5, about: 0.0 } },
        NamedTransform { name: "scale_double", map: Transform1D::Scale { factor: 2.0, about: 0.0 } },
        NamedTransform {
            name: "relabel",
            map: Transform1D::SwapIntervals { a: -16.0, b: 8.0, len: 8.0 },
        },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P6StudyConfig {
    /// Monte Carlo samples per candidate evaluation.
    pub mc_samples: usize,
    /// Explanation samples per WG evaluation.
    pub wg_samples: usize,
    /// Independent repeats; each repeat uses one seed for every transform.
    pub repeats: usize,
    pub invariance_tol: f64,
    pub sensitivity_tol: f64,
    /// Half-width of the uniform baseline interval.
    pub baseline_half_width: f64,
}

impl Default for P6StudyConfig {
    fn default() -> Self {
        P6StudyConfig {
            mc_samples: 1_000_000,
            wg_samples: 20_000,
            repeats: 4,
            invariance_tol: 0.02,
            sensitivity_tol: 0.10,
            baseline_half_width: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub metric: String,
    pub transform: String,
    pub value: Option<f64>,
    pub stderr: Option<f64>,
    pub defined: bool,
    pub isometry: bool,
    /// Mean change against the original, paired per repeat.
    pub change: Option<f64>,
    pub change_stderr: Option<f64>,
    pub relative_change: Option<f64>,
    /// Invariant for isometries, sensitive otherwise.
    pub meets_contract: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVerdict {
    pub metric: String,
    pub invariant_under_isometries: bool,
    pub sensitive_to_non_isometries: bool,
    pub satisfies_p6: bool,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P6Study {
    pub config: P6StudyConfig,
    pub seed: u64,
    pub rows: Vec<StudyRow>,
    pub verdicts: Vec<MetricVerdict>,
}

impl P6Study {
    pub fn row(&self, metric: Measure, transform: &str) -> Option<&StudyRow> {
        self.rows
            .iter()
            .find(|r| r.metric == metric.name() && r.transform == transform)
    }

    pub fn verdict(&self, metric: Measure) -> Option<&MetricVerdict> {
        self.verdicts.iter().find(|v| v.metric == metric.name())
    }

    /// Long-format CSV: `metric,transform,value,stderr,defined`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,transform,value,stderr,defined\n");
        for r in &self.rows {
            let fmt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.metric,
                r.transform,
                fmt(r.value),
                fmt(r.stderr),
                r.defined
            ));
        }
        out
    }
}

/// One evaluation of `measure` on the pushed-forward mixture.
fn evaluate(
    measure: Measure,
    nu: &GaussianMixture1D,
    map: Transform1D,
    cfg: &P6StudyConfig,
    seed: u64,
) -> Result<Option<f64>> {
    let pushed = PushForward { base: nu, map };
    let u = Uniform1D {
        lo: -cfg.baseline_half_width,
        hi: cfg.baseline_half_width,
    };
    Ok(match measure {
        Measure::Entropy => Some(entropy_mc(&pushed, cfg.mc_samples, seed).value),
        Measure::Kl => kl_mc(&pushed, &u, cfg.mc_samples, seed).value(),
        Measure::Tv => Some(tv_mc(&pushed, &u, cfg.mc_samples, seed).value),
        Measure::Wg => {
            let samples: Vec<f64> = nu
                .sample(cfg.wg_samples, derive_seed(seed, Stream::Data))
                .into_iter()
                .map(|x| map.forward(x))
                .collect();
            let set = ExplanationSet::new(ExplanationKind::Attribution(1), samples)?;
            let space = SpaceConfig {
                kind: ExplanationKind::Attribution(1),
                distance: crate::spaces::DistanceSpec::new(crate::spaces::Metric::Euclidean),
                baseline: Baseline::UniformBall {
                    radius: cfg.baseline_half_width,
                    dim: 1,
                },
                centering: crate::globalness::Centering::Mean,
            };
            let solver = SolverConfig::new(SolverMethod::Exact1D);
            Some(wg(&set, &space, &solver, seed)?.normalized_wg)
        }
    })
}

/// Evaluate WG, entropy, KL and TV on the bimodal mixture under each study
/// transform, and judge each measure against the invariance contract:
/// unchanged (within `invariance_tol` relative or two paired standard errors)
/// under isometries, changed by at least `sensitivity_tol` relative under
/// every non-isometry.
pub fn p6_violation_study(seed: u64, cfg: &P6StudyConfig) -> Result<P6Study> {
    p6_study_for(seed, cfg, &Measure::ALL)
}

/// [`p6_violation_study`] restricted to `measures`.
pub fn p6_study_for(seed: u64, cfg: &P6StudyConfig, measures: &[Measure]) -> Result<P6Study> {
    if cfg.repeats < 2 {
        return Err(crate::error::Error::config("the study needs at least two repeats"));
    }
    let nu = GaussianMixture1D::bimodal();
    let transforms = study_transforms();
    let jobs: Vec<(Measure, usize, usize)> = measures
        .iter()
        .flat_map(|&m| {
            (0..transforms.len()).flat_map(move |t| (0..cfg.repeats).map(move |r| (m, t, r)))
        })
        .collect();
    let values: Vec<Option<f64>> = jobs
        .par_iter()
        .map(|&(m, t, r)| {
            let s = derive_seed(seed, Stream::Repeat(r as u64));
            evaluate(m, &nu, transforms[t].map, cfg, s)
        })
        .collect::<Result<_>>()?;
    let lookup = |m: Measure, t: usize| -> Vec<Option<f64>> {
        jobs.iter()
            .zip(&values)
            .filter(|((jm, jt, _), _)| *jm == m && *jt == t)
            .map(|(_, v)| *v)
            .collect()
    };

    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for &m in measures {
        let base: Vec<f64> = lookup(m, 0).into_iter().flatten().collect();
        let base_mean = stats::mean(&base);
        let mut violations = Vec::new();
        let mut invariant = true;
        let mut sensitive = true;
        for (t, nt) in transforms.iter().enumerate() {
            let vals = lookup(m, t);
            let isometry = nt.map.is_isometry();
            let defined = vals.iter().all(Option::is_some) && base.len() == cfg.repeats;
            let mut row = StudyRow {
                metric: m.name().into(),
                transform: nt.name.into(),
                value: None,
                stderr: None,
                defined,
                isometry,
                change: None,
                change_stderr: None,
                relative_change: None,
                meets_contract: false,
            };
            if defined {
                let v: Vec<f64> = vals.into_iter().flatten().collect();
                let diffs: Vec<f64> = v.iter().zip(&base).map(|(a, b)| a - b).collect();
                let change = stats::mean(&diffs);
                let change_se = stats::std_err(&diffs);
                let rel = change.abs() / base_mean.abs();
                row.value = Some(stats::mean(&v));
                row.stderr = Some(stats::std_err(&v));
                row.change = Some(change);
                row.change_stderr = Some(change_se);
                row.relative_change = Some(rel);
                row.meets_contract = if t == 0 {
                    true
                } else if isometry {
                    change.abs() <= (cfg.invariance_tol * base_mean.abs()).max(2.0 * change_se)
                } else {
                    rel >= cfg.sensitivity_tol && change.abs() > 2.0 * change_se
                };
            }
            if !row.meets_contract {
                if isometry {
                    invariant = false;
                } else {
                    sensitive = false;
                }
                violations.push(if !defined {
                    format!("undefined under {}", nt.name)
                } else if isometry {
                    format!("changes under isometry {}", nt.name)
                } else {
                    format!("invariant under non-isometry {}", nt.name)
                });
            }
            rows.push(row);
        }
        verdicts.push(MetricVerdict {
            metric: m.name().into(),
            invariant_under_isometries: invariant,
            sensitive_to_non_isometries: sensitive,
            satisfies_p6: invariant && sensitive,
            violations,
        });
    }
    Ok(P6Study {
        config: *cfg,
        seed,
        rows,
        verdicts,
    })
}

/// `½ ln(2πe σ²)`.
pub fn gaussian_entropy(std: f64) -> f64 {
    0.5 * (2.0 * PI * std::f64::consts::E * std * std).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn densities_integrate_to_one() {
        let nu = GaussianMixture1D::bimodal();
        assert!((integrate(&nu, 200_001) - 1.0).abs() < 1e-3);
        let u = Uniform1D { lo: -30.0, hi: 30.0 };
        assert!((integrate(&u, 10_001) - 1.0).abs() < 1e-3);
        for t in study_transforms() {
            let p = PushForward { base: &nu, map: t.map };
            assert!((integrate(&p, 400_001) - 1.0).abs() < 1e-3, "{}", t.name);
        }
    }

    #[test]
    fn entropy_of_uniform_unit_interval() {
        let e = entropy_mc(&Uniform1D { lo: 0.0, hi: 1.0 }, 10_000, 1);
        assert!(e.value.abs() < 0.02);
        let e = entropy_mc(&Uniform1D { lo: -30.0, hi: 30.0 }, 10_000, 1);
        assert!((e.value - 60f64.ln()).abs() < 0.02);
    }

    #[test]
    fn entropy_of_standard_normal() {
        let e = entropy_mc(&GaussianMixture1D::normal(0.0, 1.0), 200_000, 2);
        assert!((e.value - gaussian_entropy(1.0)).abs() < 0.02, "{}", e.value);
        assert!((gaussian_entropy(1.0) - 1.4189385).abs() < 1e-6);
    }

    #[test]
    fn identical_densities_have_zero_divergence() {
        let u = Uniform1D { lo: -30.0, hi: 30.0 };
        let kl = kl_mc(&u, &u, 10_000, 3).value().unwrap();
        assert!(kl.abs() < 0.01);
        assert!(tv_mc(&u, &u, 10_000, 3).value.abs() < 0.01);
    }

    #[test]
    fn disjoint_supports_have_unit_tv() {
        let a = Uniform1D { lo: 0.0, hi: 1.0 };
        let b = Uniform1D { lo: 5.0, hi: 6.0 };
        assert!((tv_mc(&a, &b, 10_000, 4).value - 1.0).abs() < 0.01);
    }

    #[test]
    fn kl_is_undefined_when_mass_leaves_the_baseline() {
        let nu = GaussianMixture1D::bimodal();
        let shifted = PushForward { base: &nu, map: Transform1D::Translate { by: 40.0 } };
        let u = Uniform1D { lo: -30.0, hi: 30.0 };
        assert!(matches!(kl_mc(&shifted, &u, 1000, 5), Divergence::Undefined { .. }));
        assert!(kl_mc(&nu, &u, 1000, 5).value().unwrap() > 0.0);
    }

    #[test]
    fn swap_is_a_measure_preserving_involution() {
        let t = Transform1D::SwapIntervals { a: -16.0, b: 8.0, len: 8.0 };
        for x in [-20.0, -16.0, -12.5, -8.0, 0.0, 8.0, 9.25, 15.999, 16.0] {
            assert_eq!(t.inverse(t.forward(x)), x);
        }
        assert!(!t.is_isometry());
        assert_eq!(t.inverse_jacobian(), 1.0);
        assert_eq!(t.map_interval((-27.2, 7.0)), (-27.2, 16.0));
    }
}

//! Property suite for a globalness measure: non-negativity (P1),
//! continuity through sample convergence (P2), convexity (P3), the fully
//! local (P4) and fully global (P5) extremes, and invariance exactly to
//! isometries (P6).

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::baseline::{center, estimate_radius_k};
use crate::candidates::{p6_study_for, Measure, P6StudyConfig};
use crate::error::{Error, Result};
use crate::globalness::{convergence_curve, dirac_normalizer, wg, wg_raw, CurveReference, SpaceConfig};
use crate::ot::{SolverConfig, SolverMethod};
use crate::rng::{derive_seed, rng_from_seed, Rng, Stream};
use crate::spaces::{ExplanationKind, ExplanationSet};
use crate::stats;
use crate::synth::{apply_transform, gaussian_blob, TransformSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomConfig {
    pub seed: u64,
    /// Measure whose invariance contract is checked; properties other than
    /// P6 only apply to WG and are skipped for the density candidates.
    pub measure: Measure,
    pub p1_cases: usize,
    pub p3_samples: usize,
    pub p3_repeats: usize,
    pub p3_sigmas: f64,
    pub p4_samples: usize,
    pub p4_tol: f64,
    pub p5_cases: usize,
    pub p5_tol: f64,
    pub p6_samples: usize,
    pub p6_projections: usize,
    pub p6_repeats: usize,
    pub p6_invariance_tol: f64,
    pub p6_sensitivity_tol: f64,
    pub p2_sizes: Vec<usize>,
    pub p2_repeats: usize,
    /// Settings of the one-dimensional transformation study used by P6.
    pub study: P6StudyConfig,
}

impl Default for AxiomConfig {
    fn default() -> Self {
        AxiomConfig {
            seed: 0,
            measure: Measure::Wg,
            p1_cases: 40,
            p3_samples: 400,
            p3_repeats: 8,
            p3_sigmas: 3.0,
            p4_samples: 8000,
            p4_tol: 0.05,
            p5_cases: 100,
            p5_tol: 0.03,
            p6_samples: 4000,
            p6_projections: 1000,
            p6_repeats: 8,
            p6_invariance_tol: 0.02,
            p6_sensitivity_tol: 0.10,
            p2_sizes: vec![50, 100, 200, 400, 800, 1600],
            p2_repeats: 8,
            study: P6StudyConfig::default(),
        }
    }
}

impl AxiomConfig {
    pub fn with_seed(seed: u64) -> Self {
        AxiomConfig {
            seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomResult {
    pub id: String,
    pub name: String,
    pub status: Status,
    pub detail: String,
    /// Worst observed value of the checked quantity.
    pub observed: Option<f64>,
    pub threshold: Option<f64>,
}

impl AxiomResult {
    fn new(id: &str, name: &str, passed: bool, detail: String, observed: f64, threshold: f64) -> Self {
        AxiomResult {
            id: id.into(),
            name: name.into(),
            status: if passed { Status::Pass } else { Status::Fail },
            detail,
            observed: Some(observed),
            threshold: Some(threshold),
        }
    }

    fn skipped(id: &str, name: &str, measure: Measure) -> Self {
        AxiomResult {
            id: id.into(),
            name: name.into(),
            status: Status::Skipped,
            detail: format!("not applicable to {}", measure.name()),
            observed: None,
            threshold: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomSuite {
    pub config: AxiomConfig,
    pub results: Vec<AxiomResult>,
}

impl AxiomSuite {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.status != Status::Fail)
    }

    pub fn get(&self, id: &str) -> Option<&AxiomResult> {
        self.results.iter().find(|r| r.id == id)
    }

    /// JUnit XML with one test case per property.
    pub fn to_junit(&self) -> String {
        let failures = self.results.iter().filter(|r| r.status == Status::Fail).count();
        let skipped = self.results.iter().filter(|r| r.status == Status::Skipped).count();
        let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        out.push_str(&format!(
            "<testsuite name=\"axioms\" tests=\"{}\" failures=\"{failures}\" skipped=\"{skipped}\">\n",
            self.results.len()
        ));
        for r in &self.results {
            out.push_str(&format!(
                "  <testcase classname=\"axioms.{}\" name=\"{} {}\"",
                self.config.measure.name(),
                r.id,
                xml_escape(&r.name)
            ));
            match r.status {
                Status::Pass => out.push_str(" />\n"),
                Status::Fail => out.push_str(&format!(
                    ">\n    <failure message=\"{}\" />\n  </testcase>\n",
                    xml_escape(&r.detail)
                )),
                Status::Skipped => out.push_str(&format!(
                    ">\n    <skipped message=\"{}\" />\n  </testcase>\n",
                    xml_escape(&r.detail)
                )),
            }
        }
        out.push_str("</testsuite>\n");
        out
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn run_axioms(cfg: &AxiomConfig) -> Result<AxiomSuite> {
    let mut results = Vec::new();
    let wg_only = [
        ("P1", "non-negativity"),
        ("P2", "continuity (convergence trend)"),
        ("P3", "convexity"),
        ("P4", "fully-local baseline"),
        ("P5", "fully-global ceiling"),
    ];
    if cfg.measure == Measure::Wg {
        results.push(check_p1(cfg)?);
        results.push(check_p2(cfg)?);
        results.push(check_p3(cfg)?);
        results.push(check_p4(cfg)?);
        results.push(check_p5(cfg)?);
    } else {
        results.extend(wg_only.iter().map(|(id, n)| AxiomResult::skipped(id, n, cfg.measure)));
    }
    results.push(check_p6(cfg)?);
    Ok(AxiomSuite {
        config: cfg.clone(),
        results,
    })
}

fn case_seed(cfg: &AxiomConfig, property: u64, case: u64) -> u64 {
    derive_seed(
        derive_seed(cfg.seed, Stream::Repeat(property)),
        Stream::Repeat(case),
    )
}

/// A random explanation set of the given kind with `n` rows.
fn fuzz_set(kind: ExplanationKind, n: usize, rng: &mut Rng) -> Result<ExplanationSet> {
    let s = kind.dim();
    let shape = rng.random_range(0..4);
    let data: Vec<f64> = match kind {
        ExplanationKind::Attribution(_) => {
            let scale = 10f64.powf(rng.random_range(-2.0..2.0));
            let atoms: Vec<Vec<f64>> = (0..rng.random_range(1..5))
                .map(|_| (0..s).map(|_| scale * rng.random_range(-1.0..1.0)).collect())
                .collect();
            (0..n)
                .flat_map(|_| {
                    let a = &atoms[rng.random_range(0..atoms.len())];
                    let jitter = if shape == 0 { 0.0 } else { scale * 0.3 * shape as f64 };
                    a.iter()
                        .map(|x| x + jitter * rng.random_range(-1.0..1.0))
                        .collect::<Vec<_>>()
                })
                .collect()
        }
        ExplanationKind::Selection(_) => {
            let bias: Vec<f64> = (0..s)
                .map(|_| if shape == 0 { f64::from(u8::from(rng.random::<bool>())) } else { rng.random() })
                .collect();
            (0..n)
                .flat_map(|_| bias.iter().map(|&b| f64::from(u8::from(rng.random::<f64>() < b))).collect::<Vec<_>>())
                .collect()
        }
        ExplanationKind::Ranking(_) => {
            let atoms: Vec<Vec<f64>> = (0..[1, 2, 3, 6][shape])
                .map(|_| {
                    let mut p: Vec<f64> = (0..s).map(|i| i as f64).collect();
                    rand::seq::SliceRandom::shuffle(p.as_mut_slice(), rng);
                    p
                })
                .collect();
            (0..n)
                .flat_map(|_| atoms[rng.random_range(0..atoms.len())].clone())
                .collect()
        }
    };
    ExplanationSet::new(kind, data)
}

fn random_kind(rng: &mut Rng) -> ExplanationKind {
    match rng.random_range(0..3) {
        0 => ExplanationKind::Attribution(rng.random_range(1..=4)),
        1 => ExplanationKind::Selection(rng.random_range(3..=6)),
        _ => ExplanationKind::Ranking(rng.random_range(3..=5)),
    }
}

/// Attribution space with the fitted radius, or radius 1 for a point mass.
fn fitted_space(set: &ExplanationSet) -> Result<SpaceConfig> {
    match set.kind() {
        ExplanationKind::Attribution(d) => match SpaceConfig::attribution_fitted(&[set]) {
            Err(Error::DegenerateRadius) => SpaceConfig::attribution(d, 1.0),
            other => other,
        },
        ExplanationKind::Selection(d) => SpaceConfig::selection(d),
        ExplanationKind::Ranking(d) => SpaceConfig::ranking(d),
    }
}

fn check_p1(cfg: &AxiomConfig) -> Result<AxiomResult> {
    let mut worst = f64::INFINITY;
    for case in 0..cfg.p1_cases as u64 {
        let seed = case_seed(cfg, 1, case);
        let mut rng = rng_from_seed(seed);
        let kind = random_kind(&mut rng);
        let n = rng.random_range(1..200);
        let set = fuzz_set(kind, n, &mut rng)?;
        let space = fitted_space(&set)?;
        let solvers = [
            SolverConfig::default_for(kind),
            SolverConfig::new(SolverMethod::ExactAssignment),
        ];
        for solver in &solvers {
            let d = wg_raw(&set, &space, solver, seed)?.distance;
            if !d.is_finite() {
                worst = f64::NEG_INFINITY;
            }
            worst = worst.min(d);
        }
    }
    let passed = worst >= 0.0;
    Ok(AxiomResult::new(
        "P1",
        "non-negativity",
        passed,
        format!("minimum raw WG over {} fuzzed sets: {worst:.3e}", cfg.p1_cases),
        worst,
        0.0,
    ))
}

fn check_p2(cfg: &AxiomConfig) -> Result<AxiomResult> {
    let space = SpaceConfig::attribution(2, 1.0)?;
    let baseline = space.baseline;
    let sampler = |n: usize, seed: u64| baseline.sample(n, seed);
    // the population value is 0, since the sampler draws from the baseline
    let (_, curve) = convergence_curve(
        sampler,
        &space,
        &SolverConfig::default_for(space.kind),
        &cfg.p2_sizes,
        cfg.p2_repeats,
        CurveReference::Value(0.0),
        derive_seed(cfg.seed, Stream::Repeat(2)),
    )?;
    let ns: Vec<f64> = curve.iter().map(|p| p.n as f64).collect();
    let devs: Vec<f64> = curve.iter().map(|p| p.mean_abs_deviation).collect();
    let slope = stats::log_log_slope(&ns, &devs);
    let passed = slope < 0.0 && devs.last() < devs.first();
    Ok(AxiomResult::new(
        "P2",
        "continuity (convergence trend)",
        passed,
        format!("log-log slope of mean |deviation| vs N: {slope:.3}"),
        slope,
        0.0,
    ))
}

fn check_p3(cfg: &AxiomConfig) -> Result<AxiomResult> {
    let n = cfg.p3_samples;
    let lambdas = [0.25, 0.5, 0.75];
    let mut rng = rng_from_seed(case_seed(cfg, 3, 0));
    let (sp, sq) = (rng.random_range(0.1..0.5), rng.random_range(0.6..1.5));
    let solver = SolverConfig::default_for(ExplanationKind::Attribution(2));

    // gaps[l][r] = mix − (λ·P + (1−λ)·Q)
    let mut gaps = vec![Vec::new(); lambdas.len()];
    for r in 0..cfg.p3_repeats as u64 {
        let seed = case_seed(cfg, 3, r + 1);
        let p = gaussian_blob(n, [0.0, 0.0], sp, derive_seed(seed, Stream::Data));
        let q = gaussian_blob(n, [0.0, 0.0], sq, derive_seed(seed, Stream::Subsample));
        let mixes: Vec<ExplanationSet> = lambdas
            .iter()
            .map(|l| {
                let np = (l * n as f64).round() as usize;
                let head: Vec<usize> = (0..np).collect();
                let tail: Vec<usize> = (0..n - np).collect();
                p.select(&head)?.concat(&q.select(&tail)?)
            })
            .collect::<Result<_>>()?;
        let mut all: Vec<ExplanationSet> = vec![center(&p), center(&q)];
        all.extend(mixes.iter().map(center));
        let refs: Vec<&ExplanationSet> = all.iter().collect();
        let space = SpaceConfig::attribution(2, estimate_radius_k(&refs)?)?;
        let wp = wg_raw(&p, &space, &solver, seed)?.distance;
        let wq = wg_raw(&q, &space, &solver, seed)?.distance;
        for (i, (l, mix)) in lambdas.iter().zip(&mixes).enumerate() {
            let wm = wg_raw(mix, &space, &solver, seed)?.distance;
            gaps[i].push(wm - (l * wp + (1.0 - l) * wq));
        }
    }
    let mut worst = f64::NEG_INFINITY;
    let mut passed = true;
    let mut parts = Vec::new();
    for (l, g) in lambdas.iter().zip(&gaps) {
        let (m, se) = (stats::mean(g), stats::std_err(g));
        let excess = m - cfg.p3_sigmas * se;
        worst = worst.max(excess);
        passed &= excess <= 0.0;
        parts.push(format!("λ={l}: gap {m:.4} ± {se:.4}"));
    }
    Ok(AxiomResult::new(
        "P3",
        "convexity",
        passed,
        format!("std {sp:.2} vs {sq:.2}; {}", parts.join(", ")),
        worst,
        0.0,
    ))
}

fn check_p4(cfg: &AxiomConfig) -> Result<AxiomResult> {
    let spaces = [
        SpaceConfig::attribution(2, 1.0)?,
        SpaceConfig::selection(4)?,
        SpaceConfig::ranking(4)?,
    ];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (i, space) in spaces.iter().enumerate() {
        let seed = case_seed(cfg, 4, i as u64);
        let set = space.baseline.sample(cfg.p4_samples, derive_seed(seed, Stream::Data))?;
        let r = wg(&set, space, &SolverConfig::default_for(space.kind), seed)?;
        worst = worst.max(r.normalized_wg);
        parts.push(format!("{}: {:.4}", space.kind, r.normalized_wg));
    }
    Ok(AxiomResult::new(
        "P4",
        "fully-local baseline",
        worst <= cfg.p4_tol,
        format!("normalized WG of baseline samples (N={}): {}", cfg.p4_samples, parts.join(", ")),
        worst,
        cfg.p4_tol,
    ))
}

fn check_p5(cfg: &AxiomConfig) -> Result<AxiomResult> {
    let mut worst: f64 = 0.0;
    let mut worst_kind = String::new();
    for case in 0..cfg.p5_cases as u64 {
        let seed = case_seed(cfg, 5, case);
        let mut rng = rng_from_seed(seed);
        let kind = random_kind(&mut rng);
        // discrete spaces are cheap after atom merging, so use large N there
        let n = match kind {
            ExplanationKind::Attribution(_) => 2000,
            _ => 20_000,
        };
        let set = fuzz_set(kind, n, &mut rng)?;
        let space = fitted_space(&set)?;
        let r = wg(&set, &space, &SolverConfig::default_for(kind), seed)?;
        if r.normalized_wg > worst {
            worst = r.normalized_wg;
            worst_kind = kind.to_string();
        }
    }
    let limit = 1.0 + cfg.p5_tol;
    Ok(AxiomResult::new(
        "P5",
        "fully-global ceiling",
        worst <= limit,
        format!(
            "maximum normalized WG over {} fuzzed sets: {worst:.4} ({worst_kind})",
            cfg.p5_cases
        ),
        worst,
        limit,
    ))
}

/// Relative drift of WG under each transform of a spread-out 2-D set, with
/// one radius shared by all transformed copies. Each WG value is averaged over
/// `repeats` solver seeds.
pub fn isometry_drifts(
    n: usize,
    solver: &SolverConfig,
    repeats: usize,
    spread: f64,
    seed: u64,
) -> Result<Vec<(TransformSpec, f64)>> {
    let base = gaussian_blob(n / 2, [-1.5, 0.5], spread, derive_seed(seed, Stream::Data)).concat(
        &gaussian_blob(n - n / 2, [1.5, -0.5], spread, derive_seed(seed, Stream::Subsample)),
    )?;
    let transforms = vec![
        TransformSpec::Rotate { angle: 0.7, i: 0, j: 1 },
        TransformSpec::Reflect { axis: 0 },
        TransformSpec::Translate { by: vec![3.0, -2.0] },
        TransformSpec::Scale { factor: 0.5 },
    ];
    let sets: Vec<ExplanationSet> = transforms
        .iter()
        .map(|t| apply_transform(&base, t))
        .collect::<Result<_>>()?;
    let mut centered = vec![center(&base)];
    centered.extend(sets.iter().map(center));
    let refs: Vec<&ExplanationSet> = centered.iter().collect();
    let space = SpaceConfig::attribution(2, estimate_radius_k(&refs)?)?;
    // every copy shares the space, so one normalizer per solver seed serves all
    let seeds: Vec<u64> = (0..repeats as u64)
        .map(|r| derive_seed(seed, Stream::Repeat(r)))
        .collect();
    let norms = seeds
        .iter()
        .map(|&s| Ok(dirac_normalizer(&space, solver, n, s)?.distance))
        .collect::<Result<Vec<f64>>>()?;
    let mean_wg = |set: &ExplanationSet| -> Result<f64> {
        let vals = seeds
            .iter()
            .zip(&norms)
            .map(|(&s, norm)| Ok(wg_raw(set, &space, solver, s)?.distance / norm))
            .collect::<Result<Vec<f64>>>()?;
        Ok(stats::mean(&vals))
    };
    let w0 = mean_wg(&base)?;
    transforms
        .into_iter()
        .zip(&sets)
        .map(|(t, s)| Ok((t, (mean_wg(s)? - w0).abs() / w0)))
        .collect()
}

/// Cluster std of the two-cluster test set.
const P6_SPREAD: f64 = 0.3;

fn check_p6(cfg: &AxiomConfig) -> Result<AxiomResult> {
    let study_cfg = P6StudyConfig {
        invariance_tol: cfg.p6_invariance_tol,
        sensitivity_tol: cfg.p6_sensitivity_tol,
        ..cfg.study
    };
    let study = p6_study_for(derive_seed(cfg.seed, Stream::Repeat(6)), &study_cfg, &[cfg.measure])?;
    let verdict = study.verdict(cfg.measure).expect("measure was evaluated");
    let mut passed = verdict.satisfies_p6;
    let mut parts = vec![if verdict.violations.is_empty() {
        "1-D study: contract met".to_string()
    } else {
        format!("1-D study: {}", verdict.violations.join(", "))
    }];
    let mut worst = 0.0;
    if cfg.measure == Measure::Wg {
        for (t, drift) in isometry_drifts(
            cfg.p6_samples,
            &SolverConfig::new(SolverMethod::Sliced {
                num_projections: cfg.p6_projections,
            }),
            cfg.p6_repeats,
            P6_SPREAD,
            case_seed(cfg, 6, 0),
        )? {
            let ok = if t.is_isometry() {
                worst = f64::max(worst, drift);
                drift <= cfg.p6_invariance_tol
            } else {
                drift >= cfg.p6_sensitivity_tol
            };
            passed &= ok;
            let name = match t {
                TransformSpec::Rotate { .. } => "rotate",
                TransformSpec::Reflect { .. } => "reflect",
                TransformSpec::Translate { .. } => "translate",
                TransformSpec::Scale { .. } => "scale 0.5",
                TransformSpec::PermuteFeatures { .. } => "permute",
            };
            parts.push(format!("{name} drift {:.2}%{}", 100.0 * drift, if ok { "" } else { " (violation)" }));
        }
    }
    Ok(AxiomResult::new(
        "P6",
        "invariance exactly to isometries",
        passed,
        parts.join("; "),
        worst,
        cfg.p6_invariance_tol,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn junit_reports_failures_and_skips() {
        let suite = AxiomSuite {
            config: AxiomConfig::default(),
            results: vec![
                AxiomResult::new("P1", "a", true, "ok".into(), 0.0, 0.0),
                AxiomResult::new("P4", "b<c", false, "too \"big\"".into(), 1.0, 0.05),
                AxiomResult::skipped("P5", "c", Measure::Tv),
            ],
        };
        assert!(!suite.passed());
        let x = suite.to_junit();
        assert!(x.contains("tests=\"3\" failures=\"1\" skipped=\"1\""));
        assert!(x.contains("b&lt;c") && x.contains("&quot;big&quot;"));
    }

    #[test]
    fn fuzzed_sets_are_valid() {
        let mut rng = rng_from_seed(3);
        for _ in 0..50 {
            let kind = random_kind(&mut rng);
            assert!(fuzz_set(kind, 20, &mut rng).is_ok());
        }
    }
}

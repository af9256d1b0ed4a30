//! Reproducible studies. Each returns plot-ready long-format CSV, a JSON
//! document and a markdown summary that states which checks passed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::baseline::Baseline;
use crate::candidates::{p6_violation_study, Measure, P6Study, P6StudyConfig, StudyRow};
use crate::error::{Error, Result};
use crate::explain::{
    explainer_accuracy, train_on_task, Explainer, ExplainerSpec, TrainConfig, DEFAULT_IG_STEPS,
    DEFAULT_SMOOTH_DRAWS,
};
use crate::globalness::{convergence_curve, wg, wg_shared, Centering, CurvePoint, CurveReference, SpaceConfig};
use crate::ot::{SolverConfig, SolverMethod};
use crate::rng::{derive_seed, Stream};
use crate::spaces::{DistanceSpec, ExplanationKind, ExplanationSet, Metric};
use crate::stats;
use crate::synth::{jagged_boundary, GaussianMixture1D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyName {
    Figure2,
    Jagged,
    Smoothing,
    Convergence,
}

impl StudyName {
    pub const ALL: [StudyName; 4] = [
        StudyName::Figure2,
        StudyName::Jagged,
        StudyName::Smoothing,
        StudyName::Convergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StudyName::Figure2 => "figure2",
            StudyName::Jagged => "jagged",
            StudyName::Smoothing => "smoothing",
            StudyName::Convergence => "convergence",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        StudyName::ALL.into_iter().find(|s| s.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyArtifacts {
    pub name: String,
    pub seed: u64,
    pub csv: String,
    pub json: Value,
    pub markdown: String,
    pub checks: Vec<Check>,
}

impl StudyArtifacts {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn new(name: StudyName, seed: u64, csv: String, data: Value, title: &str, body: String, checks: Vec<Check>) -> Self {
        let mut md = format!("# {title}\n\nseed: {seed}\n\n{body}\n## Checks\n\n| check | result | detail |\n|---|---|---|\n");
        for c in &checks {
            md.push_str(&format!(
                "| {} | {} | {} |\n",
                c.name,
                if c.passed { "pass" } else { "FAIL" },
                c.detail
            ));
        }
        let json = json!({
            "study": name.name(),
            "seed": seed,
            "passed": checks.iter().all(|c| c.passed),
            "checks": checks,
            "data": data,
        });
        StudyArtifacts {
            name: name.name().into(),
            seed,
            csv,
            json,
            markdown: md,
            checks,
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "undefined".into())
}

// ---------------------------------------------------------------- figure 2

fn within_invariance(row: &StudyRow, tol: f64, base: f64) -> bool {
    match (row.change, row.change_stderr) {
        (Some(c), Some(se)) => c.abs() <= (tol * base.abs()).max(2.0 * se),
        _ => false,
    }
}

/// Transformation study on the bimodal mixture.
pub fn figure2(seed: u64, cfg: &P6StudyConfig) -> Result<(P6Study, StudyArtifacts)> {
    let study = p6_violation_study(seed, cfg)?;
    let row = |m: Measure, t: &str| study.row(m, t).expect("study covers every cell");
    let rel = |m: Measure, t: &str| row(m, t).relative_change;
    let base = |m: Measure| row(m, "original").value.unwrap_or(f64::NAN);

    let wg_iso = ["reflect", "translate"]
        .iter()
        .all(|t| rel(Measure::Wg, t).is_some_and(|r| r <= cfg.invariance_tol));
    let wg_scale = rel(Measure::Wg, "scale_half").is_some_and(|r| r >= cfg.sensitivity_tol);
    let relabel_invariant = |m: Measure| within_invariance(row(m, "relabel"), cfg.invariance_tol, base(m));
    let checks = vec![
        Check::new(
            "WG invariant under reflection and translation",
            wg_iso,
            format!(
                "relative change {} / {}",
                fmt_opt(rel(Measure::Wg, "reflect")),
                fmt_opt(rel(Measure::Wg, "translate"))
            ),
        ),
        Check::new(
            "WG sensitive to 0.5 scaling",
            wg_scale,
            format!("relative change {}", fmt_opt(rel(Measure::Wg, "scale_half"))),
        ),
        Check::new(
            "entropy and TV invariant under relabeling",
            relabel_invariant(Measure::Entropy) && relabel_invariant(Measure::Tv),
            format!(
                "relative change {} / {}",
                fmt_opt(rel(Measure::Entropy, "relabel")),
                fmt_opt(rel(Measure::Tv, "relabel"))
            ),
        ),
        Check::new(
            "KL undefined when mass leaves the baseline support",
            !row(Measure::Kl, "scale_double").defined,
            "scale_double",
        ),
        Check::new(
            "only WG satisfies the invariance contract",
            study
                .verdicts
                .iter()
                .all(|v| v.satisfies_p6 == (v.metric == Measure::Wg.name())),
            study
                .verdicts
                .iter()
                .map(|v| format!("{}: {}", v.metric, if v.satisfies_p6 { "yes" } else { "no" }))
                .collect::<Vec<_>>()
                .join(", "),
        ),
    ];

    let mut body = String::from(
        "ν = 0.5·N(3, 0.5²) + 0.5·N(−12, 1.9²) against U[−30, 30].\n\n| metric | transform | value | stderr | relative change | contract |\n|---|---|---|---|---|---|\n",
    );
    for r in &study.rows {
        body.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} |\n",
            r.metric,
            r.transform,
            fmt_opt(r.value),
            fmt_opt(r.stderr),
            fmt_opt(r.relative_change),
            if r.meets_contract { "ok" } else { "violated" }
        ));
    }
    let data = serde_json::to_value(&study)?;
    let artifacts = StudyArtifacts::new(
        StudyName::Figure2,
        seed,
        study.to_csv(),
        data,
        "Transformation study",
        body,
        checks,
    );
    Ok((study, artifacts))
}

// ------------------------------------------------------------ jagged boundary

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JaggedConfig {
    pub n: usize,
    pub epsilon: f64,
    /// Perturbation scales are `epsilon` times these.
    pub multipliers: Vec<f64>,
    pub seeds: usize,
    pub ig_steps: usize,
    pub train: TrainConfig,
}

impl Default for JaggedConfig {
    fn default() -> Self {
        JaggedConfig {
            n: 1000,
            epsilon: 0.25,
            multipliers: vec![0.0, 1.0, 2.0, 4.0],
            seeds: 10,
            ig_steps: DEFAULT_IG_STEPS,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JaggedRow {
    pub scale: f64,
    pub seed: u64,
    pub explainer: String,
    pub accuracy: f64,
    pub normalized_wg: f64,
    pub abs_delta_wg: f64,
    pub flipped_fraction: f64,
    pub train_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JaggedSummary {
    pub scale: f64,
    pub flipped_fraction: f64,
    pub train_accuracy: f64,
    pub ground_truth_wg: f64,
    pub ig_accuracy: f64,
    pub constant_accuracy: f64,
    pub ig_wg: f64,
    pub constant_wg: f64,
    pub ig_abs_delta: f64,
    pub constant_abs_delta: f64,
}

/// Rankings by attribution magnitude.
fn magnitude_ranking(set: &ExplanationSet) -> Result<ExplanationSet> {
    set.abs()?.to_ranking()
}

fn jagged_run(cfg: &JaggedConfig, scale: f64, master: u64, run: u64) -> Result<Vec<JaggedRow>> {
    let seed = derive_seed(master, Stream::Repeat(run));
    let task = jagged_boundary(cfg.n, scale, derive_seed(seed, Stream::Data))?;
    let train_cfg = TrainConfig {
        seed: derive_seed(seed, Stream::Model),
        ..cfg.train.clone()
    };
    let model = train_on_task(&task, &train_cfg)?;
    let inputs = task.inputs();
    let labels: Vec<usize> = task.labels.iter().map(|&l| usize::from(l)).collect();
    let train_accuracy = model.accuracy(&inputs, &labels);

    let explain_seed = derive_seed(seed, Stream::Explainer);
    let ig = Explainer::new(&model, ExplainerSpec::IntegratedGradients { steps: cfg.ig_steps }, &inputs)?
        .explain_set(&inputs, explain_seed)?;
    let constant = Explainer::new(&model, ExplainerSpec::ConstantGlobal, &inputs)?
        .explain_set(&inputs, explain_seed)?;
    let truth = task.ground_truth_explanations();

    let space = SpaceConfig::ranking(2)?;
    let solver = SolverConfig::default_for(space.kind);
    let wg_seed = derive_seed(seed, Stream::Baseline);
    let score = |s: &ExplanationSet| -> Result<f64> {
        Ok(wg(&magnitude_ranking(s)?, &space, &solver, wg_seed)?.normalized_wg)
    };
    let gt_wg = score(&truth)?;
    let mut rows = Vec::new();
    for (name, set) in [("ground_truth", &truth), ("integrated_gradients", &ig), ("constant_global", &constant)] {
        let w = score(set)?;
        rows.push(JaggedRow {
            scale,
            seed: run,
            explainer: name.into(),
            accuracy: explainer_accuracy(&task, set)?,
            normalized_wg: w,
            abs_delta_wg: (w - gt_wg).abs(),
            flipped_fraction: task.flipped_fraction(),
            train_accuracy,
        });
    }
    Ok(rows)
}

/// Retrain on increasingly perturbed jagged-boundary tasks and compare IG
/// and a constant global explainer with the ground truth, both by explainer
/// accuracy and by globalness of the magnitude rankings.
pub fn jagged(seed: u64, cfg: &JaggedConfig) -> Result<(Vec<JaggedSummary>, StudyArtifacts)> {
    if cfg.seeds == 0 || cfg.multipliers.is_empty() {
        return Err(Error::config("the jagged study needs seeds and scales"));
    }
    let scales: Vec<f64> = cfg.multipliers.iter().map(|m| m * cfg.epsilon).collect();
    let jobs: Vec<(f64, u64)> = scales
        .iter()
        .flat_map(|&s| (0..cfg.seeds as u64).map(move |r| (s, r)))
        .collect();
    let rows: Vec<JaggedRow> = jobs
        .par_iter()
        .map(|&(s, r)| jagged_run(cfg, s, seed, r))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let mean_of = |scale: f64, explainer: &str, f: fn(&JaggedRow) -> f64| -> f64 {
        let v: Vec<f64> = rows
            .iter()
            .filter(|r| r.scale == scale && r.explainer == explainer)
            .map(f)
            .collect();
        stats::mean(&v)
    };
    let summaries: Vec<JaggedSummary> = scales
        .iter()
        .map(|&s| JaggedSummary {
            scale: s,
            flipped_fraction: mean_of(s, "ground_truth", |r| r.flipped_fraction),
            train_accuracy: mean_of(s, "ground_truth", |r| r.train_accuracy),
            ground_truth_wg: mean_of(s, "ground_truth", |r| r.normalized_wg),
            ig_accuracy: mean_of(s, "integrated_gradients", |r| r.accuracy),
            constant_accuracy: mean_of(s, "constant_global", |r| r.accuracy),
            ig_wg: mean_of(s, "integrated_gradients", |r| r.normalized_wg),
            constant_wg: mean_of(s, "constant_global", |r| r.normalized_wg),
            ig_abs_delta: mean_of(s, "integrated_gradients", |r| r.abs_delta_wg),
            constant_abs_delta: mean_of(s, "constant_global", |r| r.abs_delta_wg),
        })
        .collect();

    let acc_ok = summaries.iter().all(|s| s.ig_accuracy > s.constant_accuracy);
    let delta_ok = summaries.iter().all(|s| s.ig_abs_delta < s.constant_abs_delta);
    let checks = vec![
        Check::new(
            "IG accuracy above constant-global at every scale",
            acc_ok,
            summaries
                .iter()
                .map(|s| format!("{}: {:.3} vs {:.3}", s.scale, s.ig_accuracy, s.constant_accuracy))
                .collect::<Vec<_>>()
                .join("; "),
        ),
        Check::new(
            "IG closer to ground-truth WG than constant-global at every scale",
            delta_ok,
            summaries
                .iter()
                .map(|s| format!("{}: {:.3} vs {:.3}", s.scale, s.ig_abs_delta, s.constant_abs_delta))
                .collect::<Vec<_>>()
                .join("; "),
        ),
    ];

    let mut csv = String::from(
        "scale,seed,explainer,accuracy,normalized_wg,abs_delta_wg,flipped_fraction,train_accuracy\n",
    );
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.scale, r.seed, r.explainer, r.accuracy, r.normalized_wg, r.abs_delta_wg, r.flipped_fraction, r.train_accuracy
        ));
    }
    let mut body = format!(
        "N = {}, {} seeds per scale, WG of magnitude rankings in S_2 (Kendall tau, p = 1).\n\n| scale | flipped | train acc | WG truth | acc IG | acc const | WG IG | WG const | abs ΔWG IG | abs ΔWG const |\n|---|---|---|---|---|---|---|---|---|---|\n",
        cfg.n, cfg.seeds
    );
    for s in &summaries {
        body.push_str(&format!(
            "| {} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} |\n",
            s.scale,
            s.flipped_fraction,
            s.train_accuracy,
            s.ground_truth_wg,
            s.ig_accuracy,
            s.constant_accuracy,
            s.ig_wg,
            s.constant_wg,
            s.ig_abs_delta,
            s.constant_abs_delta
        ));
    }
    let data = json!({ "config": cfg, "summary": summaries, "rows": rows });
    let artifacts = StudyArtifacts::new(StudyName::Jagged, seed, csv, data, "Jagged boundary study", body, checks);
    Ok((summaries, artifacts))
}

// -------------------------------------------------------------- smoothing

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    pub n_train: usize,
    /// Points explained per seed (the first rows of the task).
    pub n_explain: usize,
    pub sigmas: Vec<f64>,
    pub seeds: usize,
    pub num_draws: usize,
    pub train: TrainConfig,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig {
            n_train: 1000,
            n_explain: 256,
            sigmas: vec![0.0, 0.1, 1.0, 10.0],
            seeds: 5,
            num_draws: DEFAULT_SMOOTH_DRAWS,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSummary {
    pub explainer: String,
    pub sigma: Option<f64>,
    pub mean_wg: f64,
    pub std_err: f64,
}

/// Normalized WG of smoothed saliency for increasing noise levels, with one
/// ball radius shared by every σ and the constant global explainer.
pub fn smoothing(seed: u64, cfg: &SmoothingConfig) -> Result<(Vec<SmoothingSummary>, StudyArtifacts)> {
    if cfg.seeds < 2 || cfg.sigmas.is_empty() || cfg.n_explain == 0 || cfg.n_explain > cfg.n_train {
        return Err(Error::config(
            "smoothing study needs ≥ 2 seeds, some sigmas and 0 < n_explain ≤ n_train",
        ));
    }
    // per_seed[r] = WG for each sigma, then the constant explainer
    let per_seed: Vec<Vec<f64>> = (0..cfg.seeds as u64)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let rs = derive_seed(seed, Stream::Repeat(r));
            let task = jagged_boundary(cfg.n_train, 0.0, derive_seed(rs, Stream::Data))?;
            let model = train_on_task(
                &task,
                &TrainConfig {
                    seed: derive_seed(rs, Stream::Model),
                    ..cfg.train.clone()
                },
            )?;
            let inputs = task.inputs();
            let subset = &inputs[..2 * cfg.n_explain];
            let explain_seed = derive_seed(rs, Stream::Explainer);
            let mut sets = Vec::new();
            for &sigma in &cfg.sigmas {
                let spec = ExplainerSpec::Smooth {
                    inner: Box::new(ExplainerSpec::saliency()),
                    sigma,
                    num_draws: cfg.num_draws,
                };
                sets.push(Explainer::new(&model, spec, &inputs)?.explain_set(subset, explain_seed)?);
            }
            sets.push(Explainer::new(&model, ExplainerSpec::ConstantGlobal, &inputs)?.explain_set(subset, explain_seed)?);
            let refs: Vec<&ExplanationSet> = sets.iter().collect();
            let reports = wg_shared(
                &refs,
                &SolverConfig::default_for(ExplanationKind::Attribution(2)),
                None,
                derive_seed(rs, Stream::Baseline),
            )?;
            Ok(reports.iter().map(|r| r.normalized_wg).collect())
        })
        .collect::<Result<_>>()?;

    let column = |i: usize| -> Vec<f64> { per_seed.iter().map(|v| v[i]).collect() };
    let mut summaries: Vec<SmoothingSummary> = cfg
        .sigmas
        .iter()
        .enumerate()
        .map(|(i, &s)| SmoothingSummary {
            explainer: "smooth_saliency".into(),
            sigma: Some(s),
            mean_wg: stats::mean(&column(i)),
            std_err: stats::std_err(&column(i)),
        })
        .collect();
    let constant = column(cfg.sigmas.len());
    summaries.push(SmoothingSummary {
        explainer: "constant_global".into(),
        sigma: None,
        mean_wg: stats::mean(&constant),
        std_err: stats::std_err(&constant),
    });

    let mut steps = Vec::new();
    let mut monotone = true;
    for i in 1..cfg.sigmas.len() {
        let diffs: Vec<f64> = column(i).iter().zip(column(i - 1)).map(|(a, b)| a - b).collect();
        let (m, se) = (stats::mean(&diffs), stats::std_err(&diffs));
        monotone &= m >= -se;
        steps.push(format!("σ {}→{}: {m:+.4} ± {se:.4}", cfg.sigmas[i - 1], cfg.sigmas[i]));
    }
    let worst_constant = constant.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    let checks = vec![
        Check::new(
            "WG non-decreasing in σ (within one paired standard error)",
            monotone,
            steps.join("; "),
        ),
        Check::new(
            "constant-global explainer at 1.00 ± 0.03",
            worst_constant <= 0.03,
            format!("max |WG − 1| = {worst_constant:.4}"),
        ),
    ];

    let mut csv = String::from("seed,explainer,sigma,normalized_wg\n");
    for (r, vals) in per_seed.iter().enumerate() {
        for (i, &s) in cfg.sigmas.iter().enumerate() {
            csv.push_str(&format!("{r},smooth_saliency,{s},{}\n", vals[i]));
        }
        csv.push_str(&format!("{r},constant_global,,{}\n", vals[cfg.sigmas.len()]));
    }
    let mut body = format!(
        "Smooth(Saliency, σ) with {} draws on {} points of the unperturbed task, {} seeds.\n\n| explainer | σ | mean WG | stderr |\n|---|---|---|---|\n",
        cfg.num_draws, cfg.n_explain, cfg.seeds
    );
    for s in &summaries {
        body.push_str(&format!(
            "| {} | {} | {:.4} | {:.4} |\n",
            s.explainer,
            s.sigma.map(|v| v.to_string()).unwrap_or_else(|| "-".into()),
            s.mean_wg,
            s.std_err
        ));
    }
    let data = json!({ "config": cfg, "summary": summaries, "per_seed": per_seed });
    let artifacts = StudyArtifacts::new(StudyName::Smoothing, seed, csv, data, "Smoothing study", body, checks);
    Ok((summaries, artifacts))
}

// ------------------------------------------------------------ convergence

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub reference_n: usize,
    pub reference_repeats: usize,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            sizes: vec![50, 100, 200, 400, 800, 1600, 3200],
            repeats: 16,
            reference_n: 100_000,
            reference_repeats: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSeries {
    pub sampler: String,
    pub reference: f64,
    pub slope: f64,
    pub points: Vec<CurvePoint>,
}

/// Deviation of the raw WG estimate from a reference as N grows, for the
/// 1-D mixture against U[−30, 30] (exact 1-D solver, large-sample reference)
/// and for baseline samples of the unit disk (sliced solver, reference 0).
pub fn convergence(seed: u64, cfg: &ConvergenceConfig) -> Result<(Vec<ConvergenceSeries>, StudyArtifacts)> {
    let mixture_space = SpaceConfig {
        kind: ExplanationKind::Attribution(1),
        distance: DistanceSpec::new(Metric::Euclidean),
        baseline: Baseline::UniformBall { radius: 30.0, dim: 1 },
        centering: Centering::Mean,
    };
    let nu = GaussianMixture1D::bimodal();
    let mixture_sampler =
        |n: usize, s: u64| ExplanationSet::new(ExplanationKind::Attribution(1), nu.sample(n, s));
    let (mref, mpoints) = convergence_curve(
        mixture_sampler,
        &mixture_space,
        &SolverConfig::new(SolverMethod::Exact1D),
        &cfg.sizes,
        cfg.repeats,
        CurveReference::LargeSample {
            n: cfg.reference_n,
            repeats: cfg.reference_repeats,
        },
        derive_seed(seed, Stream::Repeat(0)),
    )?;
    let disk = SpaceConfig::attribution(2, 1.0)?;
    let disk_baseline = disk.baseline;
    let (dref, dpoints) = convergence_curve(
        |n: usize, s: u64| disk_baseline.sample(n, s),
        &disk,
        &SolverConfig::default_for(disk.kind),
        &cfg.sizes,
        cfg.repeats,
        CurveReference::Value(0.0),
        derive_seed(seed, Stream::Repeat(1)),
    )?;
    let series: Vec<ConvergenceSeries> = [("mixture_1d", mref, mpoints), ("disk_baseline", dref, dpoints)]
        .into_iter()
        .map(|(name, reference, points)| {
            let ns: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
            let ds: Vec<f64> = points.iter().map(|p| p.mean_abs_deviation).collect();
            ConvergenceSeries {
                sampler: name.into(),
                reference,
                slope: stats::log_log_slope(&ns, &ds),
                points,
            }
        })
        .collect();

    let checks = series
        .iter()
        .map(|s| {
            let first = s.points.first().map(|p| p.mean_abs_deviation).unwrap_or(0.0);
            let last = s.points.last().map(|p| p.mean_abs_deviation).unwrap_or(0.0);
            Check::new(
                format!("{}: deviation decays with N", s.sampler),
                s.slope < 0.0 && last < first,
                format!("log-log slope {:.3}; {first:.4} → {last:.4}", s.slope),
            )
        })
        .collect();
    let mut csv = String::from("sampler,n,mean_abs_deviation,std_err,mean_wg,reference\n");
    let mut body = String::from("| sampler | N | mean abs deviation | stderr | mean raw WG |\n|---|---|---|---|---|\n");
    for s in &series {
        for p in &s.points {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.sampler, p.n, p.mean_abs_deviation, p.std_err, p.mean_wg, s.reference
            ));
            body.push_str(&format!(
                "| {} | {} | {:.5} | {:.5} | {:.5} |\n",
                s.sampler, p.n, p.mean_abs_deviation, p.std_err, p.mean_wg
            ));
        }
    }
    let data = json!({ "config": cfg, "series": series });
    let artifacts = StudyArtifacts::new(StudyName::Convergence, seed, csv, data, "Convergence study", body, checks);
    Ok((series, artifacts))
}

/// Run a study with its default configuration.
pub fn run_study(name: StudyName, seed: u64) -> Result<StudyArtifacts> {
    Ok(match name {
        StudyName::Figure2 => figure2(seed, &P6StudyConfig::default())?.1,
        StudyName::Jagged => jagged(seed, &JaggedConfig::default())?.1,
        StudyName::Smoothing => smoothing(seed, &SmoothingConfig::default())?.1,
        StudyName::Convergence => convergence(seed, &ConvergenceConfig::default())?.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn study_names_round_trip() {
        for s in StudyName::ALL {
            assert_eq!(StudyName::from_name(s.name()), Some(s));
        }
        assert_eq!(StudyName::from_name("figure3"), None);
    }

    #[test]
    fn magnitude_ranking_uses_absolute_values() {
        let set = ExplanationSet::new(ExplanationKind::Attribution(2), vec![-3.0, 1.0, 0.5, 2.0]).unwrap();
        let r = magnitude_ranking(&set).unwrap();
        assert_eq!(r.data(), &[0.0, 1.0, 1.0, 0.0]);
    }
}

use std::path::{Path, PathBuf};

use globalness_core::axioms::{run_axioms, AxiomConfig, Status};
use globalness_core::candidates::Measure;
use globalness_core::explain::{train_on_task, Explainer, ExplainerSpec, TrainConfig};
use globalness_core::io::{parse_explanations, write_explanations};
use globalness_core::studies::{run_study, StudyName};
use globalness_core::synth::{jagged_boundary, GaussianMixture1D};
use globalness_core::{
    center, estimate_radius_k, wg, Baseline, DistanceSpec, ExplanationKind, ExplanationSet,
    GlobalnessReport, Metric, SolverConfig, SolverMethod, SpaceConfig,
};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::args::*;
use crate::error::{core_exit_code, CliError, EXIT_CHECKS_FAILED, EXIT_INVALID, EXIT_OK, EXIT_USAGE};
use crate::manifest::{digest_file, locate, RunManifest};
use crate::output::{emit, json_text, write_atomic};

/// Run one parsed command; `Ok` carries the exit code (0, or 1 for failed checks).
pub fn run(cmd: Command) -> Result<i32, CliError> {
    let args = cmd.canonical_args();
    match cmd {
        Command::Score(s) => score(&s, args),
        Command::Compare(c) => compare(&c, args),
        Command::Axioms(a) => axioms(&a, args),
        Command::Study(s) => study(&s, args),
        Command::Generate(g) => generate(&g, args),
        Command::Replay(r) => replay(&r),
    }
}

struct Input {
    path: PathBuf,
    set: ExplanationSet,
}

fn load(files: &[PathBuf], n_samples: Option<usize>, seed: u64, manifest: &mut RunManifest) -> Result<Vec<Input>, CliError> {
    files
        .iter()
        .map(|path| {
            let bytes = std::fs::read(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            manifest.inputs.push(digest_file(path, &bytes));
            let text = String::from_utf8(bytes)
                .map_err(|_| CliError::Usage(format!("{} is not UTF-8", path.display())))?;
            let mut set = parse_explanations(&text)
                .map_err(|e| with_file(path, e))?
                .set;
            if let Some(n) = n_samples {
                set = set.subsample(n, seed)?;
            }
            Ok(Input { path: path.clone(), set })
        })
        .collect()
}

/// Prefix a core error with the file it came from, keeping its exit code.
fn with_file(path: &Path, e: globalness_core::Error) -> CliError {
    let msg = format!("{}: {e}", path.display());
    match core_exit_code(&e) {
        EXIT_USAGE => CliError::Usage(msg),
        EXIT_INVALID => CliError::Invalid(msg),
        _ => CliError::Core(e),
    }
}

fn metric(m: MetricArg) -> Metric {
    match m {
        MetricArg::Euclidean => Metric::Euclidean,
        MetricArg::Hamming => Metric::Hamming,
        MetricArg::Kendalltau => Metric::KendallTau,
    }
}

fn space_name(s: SpaceArg) -> &'static str {
    match s {
        SpaceArg::Attribution => "attribution",
        SpaceArg::Selection => "selection",
        SpaceArg::Ranking => "ranking",
    }
}

/// Ground metric for files of `kind`, after checking the flags agree with it.
fn distance_spec(kind: ExplanationKind, a: &SpaceArgs) -> Result<DistanceSpec, CliError> {
    if let Some(s) = a.space {
        if space_name(s) != kind.name() {
            return Err(CliError::Invalid(format!(
                "--space {} but the file holds {kind}",
                space_name(s)
            )));
        }
    }
    let m = a.metric.map(metric).unwrap_or(kind.default_metric());
    if !m.supports(kind) {
        return Err(CliError::Invalid(format!("metric {} does not apply to {kind}", m.name())));
    }
    if a.k.is_some() && !matches!(kind, ExplanationKind::Attribution(_)) {
        return Err(CliError::Usage("--k only applies to attribution files".into()));
    }
    Ok(match a.p {
        Some(p) => DistanceSpec::with_p(m, p)?,
        None => DistanceSpec::new(m),
    })
}

/// Space for `sets`; attribution radii come from `--k` or the centered sets.
fn build_space(kind: ExplanationKind, dist: DistanceSpec, k: Option<f64>, sets: &[&ExplanationSet]) -> Result<SpaceConfig, CliError> {
    let radius = match (kind, k) {
        (ExplanationKind::Attribution(_), Some(k)) => Some(k),
        (ExplanationKind::Attribution(_), None) => {
            let centered: Vec<ExplanationSet> = sets.iter().map(|s| center(s)).collect();
            Some(estimate_radius_k(&centered.iter().collect::<Vec<_>>())?)
        }
        _ => None,
    };
    Ok(SpaceConfig::new(kind, dist, radius)?)
}

fn solver(kind: ExplanationKind, dist: &DistanceSpec, a: &SolverArgs) -> Result<SolverConfig, CliError> {
    let mut method = match a.solver {
        None => SolverConfig::default_for(kind).method,
        Some(SolverArg::Sliced) => SolverMethod::sliced(),
        Some(SolverArg::Sinkhorn) => SolverMethod::sinkhorn(SolverMethod::DEFAULT_LAMBDA),
        Some(SolverArg::Exact) => match (kind, dist.metric) {
            (ExplanationKind::Attribution(1), Metric::Euclidean) => SolverMethod::Exact1D,
            _ => SolverMethod::ExactAssignment,
        },
    };
    let wrong = |flag: &str, m: &SolverMethod| {
        CliError::Usage(format!("{flag} does not apply to the {} solver", m.name()))
    };
    if let Some(n) = a.projections {
        match &mut method {
            SolverMethod::Sliced { num_projections } => *num_projections = n,
            m => return Err(wrong("--projections", m)),
        }
    }
    for (flag, given) in [
        ("--lambda", a.lambda.is_some()),
        ("--max-iter", a.max_iter.is_some()),
        ("--tol", a.tol.is_some()),
    ] {
        if given && !matches!(method, SolverMethod::Sinkhorn { .. }) {
            return Err(wrong(flag, &method));
        }
    }
    if let SolverMethod::Sinkhorn { lambda, max_iter, tol } = &mut method {
        *lambda = a.lambda.unwrap_or(*lambda);
        *max_iter = a.max_iter.unwrap_or(*max_iter);
        *tol = a.tol.unwrap_or(*tol);
    }
    method.validate()?;
    Ok(SolverConfig::new(method))
}

#[derive(Serialize)]
struct FileScore {
    file: String,
    #[serde(flatten)]
    report: GlobalnessReport,
}

fn score(a: &ScoreArgs, args: Vec<String>) -> Result<i32, CliError> {
    let seed = a.seed.seed;
    let mut manifest = RunManifest::new("score", args, seed);
    let inputs = load(&a.files, a.n_samples, seed, &mut manifest)?;
    let mut results = Vec::new();
    for input in &inputs {
        let kind = input.set.kind();
        let dist = distance_spec(kind, &a.space)?;
        let space = build_space(kind, dist, a.space.k, &[&input.set]).map_err(|e| relabel(&input.path, e))?;
        let solver = solver(kind, &dist, &a.solver)?;
        let report = wg(&input.set, &space, &solver, seed).map_err(|e| with_file(&input.path, e))?;
        if inputs.len() == 1 {
            manifest.space = Some(space);
            manifest.solver = Some(solver);
            manifest.k = space.radius();
        }
        results.push(FileScore {
            file: input.path.to_string_lossy().into_owned(),
            report,
        });
    }
    let doc = json!({ "manifest": manifest.to_value(), "results": results });
    emit(a.out.as_deref(), &json_text(&doc))?;
    Ok(EXIT_OK)
}

fn relabel(path: &Path, e: CliError) -> CliError {
    match e {
        CliError::Core(inner) => with_file(path, inner),
        other => other,
    }
}

#[derive(Serialize)]
struct Ranked {
    rank: usize,
    file: String,
    #[serde(flatten)]
    report: GlobalnessReport,
}

fn compare(c: &CompareArgs, args: Vec<String>) -> Result<i32, CliError> {
    let a = &c.score;
    let seed = a.seed.seed;
    let mut manifest = RunManifest::new("compare", args, seed);
    let inputs = load(&a.files, a.n_samples, seed, &mut manifest)?;
    let kind = inputs[0].set.kind();
    if let Some(bad) = inputs.iter().find(|i| i.set.kind() != kind) {
        return Err(CliError::Invalid(format!(
            "cannot compare {kind} ({}) with {} ({})",
            inputs[0].path.display(),
            bad.set.kind(),
            bad.path.display()
        )));
    }
    let dist = distance_spec(kind, &a.space)?;
    let sets: Vec<&ExplanationSet> = inputs.iter().map(|i| &i.set).collect();
    let space = build_space(kind, dist, a.space.k, &sets)?;
    let solver = solver(kind, &dist, &a.solver)?;
    manifest.space = Some(space);
    manifest.solver = Some(solver);
    manifest.k = space.radius();

    let mut scored = Vec::new();
    for input in &inputs {
        let report = wg(&input.set, &space, &solver, seed).map_err(|e| with_file(&input.path, e))?;
        scored.push((input.path.to_string_lossy().into_owned(), report));
    }
    scored.sort_by(|x, y| x.1.normalized_wg.total_cmp(&y.1.normalized_wg));
    let ranking: Vec<Ranked> = scored
        .into_iter()
        .enumerate()
        .map(|(i, (file, report))| Ranked { rank: i + 1, file, report })
        .collect();

    if let Some(path) = &c.csv {
        let mut csv = String::from("rank,file,normalized_wg,raw_wg,dirac_normalizer,n,converged\n");
        for r in &ranking {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.rank, r.file, r.report.normalized_wg, r.report.raw_wg, r.report.dirac_normalizer, r.report.n, r.report.converged
            ));
        }
        write_atomic(path, &csv)?;
    }
    let doc = json!({ "manifest": manifest.to_value(), "ranking": ranking });
    emit(a.out.as_deref(), &json_text(&doc))?;
    Ok(EXIT_OK)
}

fn axioms(a: &AxiomsArgs, args: Vec<String>) -> Result<i32, CliError> {
    let mut cfg = AxiomConfig::with_seed(a.seed.seed);
    cfg.measure = match a.measure {
        MeasureArg::Wg => Measure::Wg,
        MeasureArg::Entropy => Measure::Entropy,
        MeasureArg::Kl => Measure::Kl,
        MeasureArg::Tv => Measure::Tv,
    };
    cfg.p4_tol = a.p4_tol.unwrap_or(cfg.p4_tol);
    cfg.p5_tol = a.p5_tol.unwrap_or(cfg.p5_tol);
    cfg.p6_invariance_tol = a.p6_tol.unwrap_or(cfg.p6_invariance_tol);
    cfg.p6_sensitivity_tol = a.p6_sensitivity.unwrap_or(cfg.p6_sensitivity_tol);
    let suite = run_axioms(&cfg)?;
    for r in &suite.results {
        let status = match r.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Skipped => "skip",
        };
        eprintln!("{} {status:4} {}: {}", r.id, r.name, r.detail);
    }
    if let Some(path) = &a.junit {
        write_atomic(path, &suite.to_junit())?;
    }
    let manifest = RunManifest::new("axioms", args, a.seed.seed);
    let doc = json!({
        "manifest": manifest.to_value(),
        "passed": suite.passed(),
        "config": suite.config,
        "results": suite.results,
    });
    emit(a.out.as_deref(), &json_text(&doc))?;
    Ok(if suite.passed() { EXIT_OK } else { EXIT_CHECKS_FAILED })
}

fn study(a: &StudyArgs, args: Vec<String>) -> Result<i32, CliError> {
    let name = match a.name {
        StudyArg::Figure2 => StudyName::Figure2,
        StudyArg::Jagged => StudyName::Jagged,
        StudyArg::Smoothing => StudyName::Smoothing,
        StudyArg::Convergence => StudyName::Convergence,
    };
    let seed = a.seed.seed;
    let art = run_study(name, seed)?;
    for c in &art.checks {
        eprintln!("{} {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    let manifest = RunManifest::new("study", args, seed);
    let mut doc = Map::new();
    doc.insert("manifest".into(), manifest.to_value());
    if let Value::Object(fields) = &art.json {
        doc.extend(fields.clone());
    }
    let text = json_text(&doc);
    match &a.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            write_atomic(&dir.join(format!("{}.csv", art.name)), &art.csv)?;
            write_atomic(&dir.join(format!("{}.json", art.name)), &text)?;
            write_atomic(&dir.join(format!("{}.md", art.name)), &art.markdown)?;
        }
        None => emit(None, &text)?,
    }
    Ok(if art.passed() { EXIT_OK } else { EXIT_CHECKS_FAILED })
}

fn explainer_spec(e: ExplainerArg, sigma: f64) -> ExplainerSpec {
    match e {
        ExplainerArg::Saliency => ExplainerSpec::saliency(),
        ExplainerArg::InputXGradient => ExplainerSpec::InputXGradient,
        ExplainerArg::Ig => ExplainerSpec::integrated_gradients(),
        ExplainerArg::Smoothgrad => ExplainerSpec::smooth(ExplainerSpec::saliency(), sigma),
        ExplainerArg::ConstantGlobal => ExplainerSpec::ConstantGlobal,
    }
}

fn parse_point(text: &str, s: usize) -> Result<Vec<f64>, CliError> {
    let point = text
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CliError::Usage(format!("--point {text:?} is not a comma-separated list of numbers")))?;
    if point.len() != s {
        return Err(CliError::Usage(format!("--point has {} entries but --s is {s}", point.len())));
    }
    Ok(point)
}

fn generate(g: &GenerateArgs, args: Vec<String>) -> Result<i32, CliError> {
    let seed = g.seed.seed;
    let manifest = RunManifest::new("generate", args, seed).to_value();
    let what = value_name(&g.what);
    let kind = ExplanationKind::from_name(space_name(g.space), g.s)?;
    let mut meta = Map::new();
    meta.insert("generator".into(), Value::String(what));

    let set = match g.what {
        GenerateWhat::Jagged => {
            let task = jagged_boundary(g.n, g.scale, seed)?;
            let header = json!({ "manifest": manifest, "flipped_fraction": task.flipped_fraction() });
            let text = format!("# {header}\n{}", task.to_csv());
            emit(g.out.as_deref(), &text)?;
            return Ok(EXIT_OK);
        }
        GenerateWhat::Baseline => {
            let radius = matches!(kind, ExplanationKind::Attribution(_)).then_some(g.k);
            Baseline::for_kind(kind, radius)?.sample(g.n, seed)?
        }
        GenerateWhat::Dirac => {
            let point = match &g.point {
                Some(p) => parse_point(p, g.s)?,
                None => Baseline::for_kind(kind, Some(g.k))?.dirac_point(),
            };
            ExplanationSet::repeated(kind, &point, g.n)?
        }
        GenerateWhat::Mixture => {
            if g.space != SpaceArg::Attribution || g.s != 1 {
                return Err(CliError::Usage("the mixture is one-dimensional: use --space attribution --s 1".into()));
            }
            let x = GaussianMixture1D::bimodal().sample(g.n, seed);
            ExplanationSet::new(kind, x.into_iter().map(|v| v * g.spread).collect())?
        }
        GenerateWhat::Explanations => {
            let task = jagged_boundary(g.n, g.scale, seed)?;
            let model = train_on_task(&task, &TrainConfig { seed, ..Default::default() })?;
            let inputs = task.inputs();
            let spec = explainer_spec(g.explainer, g.sigma);
            meta.insert("explainer".into(), Value::String(spec.name()));
            let set = Explainer::new(&model, spec, &inputs)?.explain_set(&inputs, seed)?;
            match g.space {
                SpaceArg::Attribution => set,
                SpaceArg::Ranking => set.to_ranking()?,
                SpaceArg::Selection => {
                    return Err(CliError::Usage(
                        "gradient explainers produce attributions or rankings, not selections".into(),
                    ))
                }
            }
        }
    };
    meta.insert("manifest".into(), manifest);
    emit(g.out.as_deref(), &write_explanations(&set, &meta))?;
    Ok(EXIT_OK)
}

fn replay(r: &ReplayArgs) -> Result<i32, CliError> {
    use clap::Parser;
    let manifest = locate(&r.manifest)?;
    manifest.verify_inputs()?;
    let argv = std::iter::once(manifest.tool.clone()).chain(manifest.args.iter().cloned());
    let mut cmd = Cli::try_parse_from(argv)
        .map_err(|e| CliError::Usage(format!("manifest arguments do not parse: {e}")))?
        .command;
    if matches!(cmd, Command::Replay(_)) {
        return Err(CliError::Usage("a manifest cannot record a replay".into()));
    }
    cmd.set_out(r.out.clone());
    run(cmd)
}

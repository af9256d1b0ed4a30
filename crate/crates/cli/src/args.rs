use std::fmt::Display;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug, Clone, PartialEq)]
#[command(
    name = "wg",
    version,
    about = "Wasserstein globalness of explanation distributions",
    long_about = "Scores how global a set of model explanations is: 0 for explanations spread like the \
                  uniform baseline, 1 for a single explanation shared by every input.\n\n\
                  Exit codes: 0 ok, 1 checks failed, 2 usage or parse error, 3 invalid input, 4 internal error."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
pub enum Command {
    /// Score each explanation file on its own.
    Score(ScoreArgs),
    /// Score files against one shared baseline and rank them.
    Compare(CompareArgs),
    /// Run the axiom property suite.
    Axioms(AxiomsArgs),
    /// Run a reproducible study and write CSV, JSON and markdown artifacts.
    Study(StudyArgs),
    /// Write synthetic explanation files or the jagged-boundary dataset.
    Generate(GenerateArgs),
    /// Rerun the command recorded in a manifest (or in a report embedding one).
    Replay(ReplayArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceArg {
    Attribution,
    Selection,
    Ranking,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricArg {
    Euclidean,
    Hamming,
    Kendalltau,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverArg {
    Sliced,
    Sinkhorn,
    Exact,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureArg {
    Wg,
    Entropy,
    Kl,
    Tv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyArg {
    Figure2,
    Jagged,
    Smoothing,
    Convergence,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenerateWhat {
    /// Jagged-boundary points, labels and ground-truth features (CSV).
    Jagged,
    /// Draws from the uniform baseline of a space.
    Baseline,
    /// N copies of one explanation.
    Dirac,
    /// The bimodal 1-D Gaussian mixture, optionally rescaled.
    Mixture,
    /// Explanations of a model trained on the jagged-boundary task.
    Explanations,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExplainerArg {
    Saliency,
    InputXGradient,
    Ig,
    Smoothgrad,
    ConstantGlobal,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct SeedArg {
    /// Master seed for every random stream.
    #[arg(long, env = "WG_DEFAULT_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Default, PartialEq)]
pub struct SpaceArgs {
    /// Expected explanation kind; must match the file header.
    #[arg(long, value_enum)]
    pub space: Option<SpaceArg>,
    /// Ground metric (defaults to the kind's standard metric).
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    /// Wasserstein order (default 2 for euclidean, 1 otherwise).
    #[arg(long)]
    pub p: Option<f64>,
    /// Baseline ball radius for attributions, instead of the max-norm estimate.
    /// Required when every centered explanation is zero (a point mass).
    #[arg(long)]
    pub k: Option<f64>,
}

#[derive(Args, Debug, Clone, Default, PartialEq)]
pub struct SolverArgs {
    /// Transport solver (default: sliced for attributions, sinkhorn otherwise).
    #[arg(long, value_enum)]
    pub solver: Option<SolverArg>,
    /// Random directions for the sliced solver.
    #[arg(long)]
    pub projections: Option<usize>,
    /// Inverse regularization strength for sinkhorn.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct ScoreArgs {
    /// Explanation files.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    #[command(flatten)]
    pub space: SpaceArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Score a seeded subsample of this many explanations.
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct CompareArgs {
    #[command(flatten)]
    pub score: ScoreArgs,
    /// Also write the ranking table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct AxiomsArgs {
    #[command(flatten)]
    pub seed: SeedArg,
    /// Measure whose invariance contract is checked.
    #[arg(long, value_enum, default_value_t = MeasureArg::Wg)]
    pub measure: MeasureArg,
    /// Largest normalized WG allowed for baseline samples (P4).
    #[arg(long)]
    pub p4_tol: Option<f64>,
    /// Allowed excess of normalized WG over 1 (P5).
    #[arg(long)]
    pub p5_tol: Option<f64>,
    /// Largest relative drift allowed under isometries (P6).
    #[arg(long)]
    pub p6_tol: Option<f64>,
    /// Smallest relative drift required under 0.5 scaling (P6).
    #[arg(long)]
    pub p6_sensitivity: Option<f64>,
    /// Write a JUnit XML summary here.
    #[arg(long)]
    pub junit: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct StudyArgs {
    #[arg(value_enum)]
    pub name: StudyArg,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Directory for `<name>.csv`, `<name>.json` and `<name>.md`; without it
    /// the JSON goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub what: GenerateWhat,
    /// Number of explanations or points.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = SpaceArg::Attribution)]
    pub space: SpaceArg,
    /// Explanation dimension for baseline and dirac files.
    #[arg(long, default_value_t = 2)]
    pub s: usize,
    /// Ball radius of the attribution baseline.
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    /// Comma-separated explanation repeated by `dirac` (default: the space's
    /// reference point).
    #[arg(long)]
    pub point: Option<String>,
    /// Label-flood perturbation scale of the jagged-boundary task.
    #[arg(long, default_value_t = 0.0)]
    pub scale: f64,
    /// Factor applied to mixture draws.
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,
    #[arg(long, value_enum, default_value_t = ExplainerArg::Ig)]
    pub explainer: ExplainerArg,
    /// Noise level for `smoothgrad`.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct ReplayArgs {
    /// Manifest JSON, a JSON report, or a generated file carrying one.
    pub manifest: PathBuf,
    /// Output location for the rerun (file, or directory for `study`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn value_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_string()
}

fn push<T: Display>(args: &mut Vec<String>, flag: &str, v: Option<T>) {
    // `--flag=value` keeps negative numbers from reading as flags
    if let Some(v) = v {
        args.push(format!("{flag}={v}"));
    }
}

fn push_enum<T: ValueEnum>(args: &mut Vec<String>, flag: &str, v: Option<&T>) {
    push(args, flag, v.map(value_name));
}

fn path(p: &std::path::Path) -> String {
    p.to_string_lossy().into_owned()
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Score(_) => "score",
            Command::Compare(_) => "compare",
            Command::Axioms(_) => "axioms",
            Command::Study(_) => "study",
            Command::Generate(_) => "generate",
            Command::Replay(_) => "replay",
        }
    }

    /// Arguments that reproduce this command, with the seed spelled out and
    /// output locations left off. Parsing them back yields the same command
    /// minus its outputs, so the list is stable under replay.
    pub fn canonical_args(&self) -> Vec<String> {
        let mut a = vec![self.name().to_string()];
        match self {
            Command::Score(s) => score_args(&mut a, s),
            Command::Compare(c) => score_args(&mut a, &c.score),
            Command::Axioms(x) => {
                push(&mut a, "--seed", Some(x.seed.seed));
                push_enum(&mut a, "--measure", Some(&x.measure));
                push(&mut a, "--p4-tol", x.p4_tol);
                push(&mut a, "--p5-tol", x.p5_tol);
                push(&mut a, "--p6-tol", x.p6_tol);
                push(&mut a, "--p6-sensitivity", x.p6_sensitivity);
            }
            Command::Study(s) => {
                a.push(value_name(&s.name));
                push(&mut a, "--seed", Some(s.seed.seed));
            }
            Command::Generate(g) => {
                a.push(value_name(&g.what));
                push(&mut a, "--n", Some(g.n));
                push_enum(&mut a, "--space", Some(&g.space));
                push(&mut a, "--s", Some(g.s));
                push(&mut a, "--k", Some(g.k));
                push(&mut a, "--point", g.point.as_ref());
                push(&mut a, "--scale", Some(g.scale));
                push(&mut a, "--spread", Some(g.spread));
                push_enum(&mut a, "--explainer", Some(&g.explainer));
                push(&mut a, "--sigma", Some(g.sigma));
                push(&mut a, "--seed", Some(g.seed.seed));
            }
            Command::Replay(r) => a.push(path(&r.manifest)),
        }
        a
    }

    /// Point the command's primary output at `out`.
    pub fn set_out(&mut self, out: Option<PathBuf>) {
        match self {
            Command::Score(s) => s.out = out,
            Command::Compare(c) => c.score.out = out,
            Command::Axioms(x) => x.out = out,
            Command::Study(s) => s.out = out,
            Command::Generate(g) => g.out = out,
            Command::Replay(r) => r.out = out,
        }
    }
}

fn score_args(a: &mut Vec<String>, s: &ScoreArgs) {
    a.extend(s.files.iter().map(|p| path(p)));
    push_enum(a, "--space", s.space.space.as_ref());
    push_enum(a, "--metric", s.space.metric.as_ref());
    push(a, "--p", s.space.p);
    push(a, "--k", s.space.k);
    push_enum(a, "--solver", s.solver.solver.as_ref());
    push(a, "--projections", s.solver.projections);
    push(a, "--lambda", s.solver.lambda);
    push(a, "--max-iter", s.solver.max_iter);
    push(a, "--tol", s.solver.tol);
    push(a, "--n-samples", s.n_samples);
    push(a, "--seed", Some(s.seed.seed));
}

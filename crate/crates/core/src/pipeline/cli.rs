//! `qrest` command line: gen, label, train, eval, perturb-eval, report.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use super::dataset::{generate, read_dataset, write_dataset, GenSpec, Split, Suite};
use super::label::{label_file, LabelOptions};
use super::manifest::RunManifest;
use super::report::{render_report, EvalArtifact, REPORT_SUFFIX};
use super::run::{evaluate_model, select_split, train_on_records, PredictionRow};
use super::{file_sha256, sibling, write_atomic};
use crate::error::{Error, Result};
use crate::measures::Measure;
use crate::sdp::DEFAULT_TOL;
use crate::svm::{GridSpec, ModelKind, SvrModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SOLVER_BUDGET: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "qrest", version, about = "Learn coherence and entanglement measures from state features")]
pub struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// SDP solver tolerance.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    /// Output path (dataset, model, or report stem depending on the command).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate unlabeled records with features.
    Gen(GenArgs),
    /// Attach measure labels to a dataset.
    Label(LabelArgs),
    /// Grid-search and fit a model on the training split.
    Train(TrainArgs),
    /// Evaluate a model on a dataset.
    Eval(EvalArgs),
    /// Evaluate on perturbed features.
    PerturbEval(PerturbArgs),
    /// Summarize every report in a run directory.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_parser = parse_suite)]
    pub suite: Suite,
    /// Local dimensions, e.g. 2x2x2 or 3x3.
    #[arg(long, value_parser = parse_dims)]
    pub dims: Dims,
    #[arg(long)]
    pub count: usize,
}

#[derive(Args, Debug)]
pub struct LabelArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_measure)]
    pub measure: Measure,
    /// Use closed forms instead of the SDP where a family has one.
    #[arg(long)]
    pub closed_forms: bool,
    /// Number of failed records tolerated before exiting with status 2.
    #[arg(long, default_value_t = 0)]
    pub failure_budget: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum KindArg {
    Svr,
    Svqr,
}

impl From<KindArg> for ModelKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Svr => ModelKind::Svr,
            KindArg::Svqr => ModelKind::Svqr,
        }
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = KindArg::Svr)]
    pub model: KindArg,
    #[arg(long, default_value_t = 0.02)]
    pub delta: f64,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Cross-validate on at most this many training records.
    #[arg(long)]
    pub subsample: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub c: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub epsilon: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub tau: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-3)]
    pub svm_tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_passes: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
    All,
}

impl SplitArg {
    fn split(self) -> Option<Split> {
        match self {
            SplitArg::Train => Some(Split::Train),
            SplitArg::Test => Some(Split::Test),
            SplitArg::All => None,
        }
    }
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
}

#[derive(Args, Debug)]
pub struct PerturbArgs {
    #[command(flatten)]
    pub eval: EvalArgs,
    #[arg(long, default_value_t = 0.02)]
    pub level: f64,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[arg(long)]
    pub run_dir: PathBuf,
}

fn parse_suite(s: &str) -> std::result::Result<Suite, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_measure(s: &str) -> std::result::Result<Measure, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dims(pub Vec<usize>);

fn parse_dims(s: &str) -> std::result::Result<Dims, String> {
    s.split('x')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("bad dimension {p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()
        .map(Dims)
}

/// Outcome of a command that completed but should still set a nonzero status.
enum Done {
    Ok,
    BudgetExceeded(usize),
}

fn require_out(cli: &Cli) -> Result<&Path> {
    cli.out
        .as_deref()
        .ok_or_else(|| Error::InvalidInput("--out is required for this command".into()))
}

fn cmd_gen(cli: &Cli, args: &GenArgs) -> Result<Done> {
    let out = require_out(cli)?;
    let spec = GenSpec {
        suite: args.suite,
        dims: args.dims.0.clone(),
        count: args.count,
        seed: cli.seed,
    };
    let records = generate(&spec)?;
    write_dataset(out, &records)?;
    let mut manifest = RunManifest::new("gen", cli.seed, cli.tol, cli.workers, serde_json::to_value(&spec)?);
    manifest.add_artifact(out)?;
    manifest.finish(out)?;
    Ok(Done::Ok)
}

fn cmd_label(cli: &Cli, args: &LabelArgs) -> Result<Done> {
    let out = require_out(cli)?;
    let opts = LabelOptions {
        measure: args.measure,
        tol: cli.tol,
        workers: cli.workers,
        closed_forms: args.closed_forms,
    };
    let mut manifest = RunManifest::new(
        "label",
        cli.seed,
        cli.tol,
        cli.workers,
        json!({ "options": opts, "failure_budget": args.failure_budget }),
    );
    manifest.add_input(&args.input)?;
    let summary = label_file(&args.input, out, &opts)?;
    manifest.add_artifact(out)?;
    manifest.note("summary", &summary)?;
    manifest.finish(out)?;
    for (id, err) in &summary.failures {
        eprintln!("label failed for {id}: {err}");
    }
    if summary.failed > args.failure_budget {
        Ok(Done::BudgetExceeded(summary.failed))
    } else {
        Ok(Done::Ok)
    }
}

fn cmd_train(cli: &Cli, args: &TrainArgs) -> Result<Done> {
    let out = require_out(cli)?;
    let defaults = GridSpec::default();
    let grid = GridSpec {
        c: args.c.clone().unwrap_or(defaults.c),
        epsilon: args.epsilon.clone().unwrap_or(defaults.epsilon),
        tau: args.tau.clone().unwrap_or(defaults.tau),
        delta: args.delta,
        folds: args.folds,
        seed: cli.seed,
        subsample: args.subsample,
        tol: args.svm_tol,
        max_passes: args.max_passes,
        workers: cli.workers,
    };
    let kind = ModelKind::from(args.model);
    let records = read_dataset(&args.input)?;
    let mut outcome = train_on_records(&records, kind, &grid)?;
    outcome.model.train_manifest_hash = Some(file_sha256(&args.input)?);
    outcome.model.save(out)?;

    let mut cv = String::from("c,epsilon,tau,delta,score\n");
    for row in &outcome.cv {
        let tau = match row.config.kernel {
            crate::svm::KernelSpec::Rbf { tau } => tau,
            _ => f64::NAN,
        };
        cv.push_str(&format!(
            "{},{},{},{},{}\n",
            row.config.c,
            row.config.epsilon,
            tau,
            row.config.delta.map(|d| d.to_string()).unwrap_or_default(),
            row.score
        ));
    }
    let cv_path = sibling(out, ".cv.csv");
    write_atomic(&cv_path, cv.as_bytes())?;

    let mut manifest = RunManifest::new("train", cli.seed, cli.tol, cli.workers, json!({ "kind": kind, "grid": grid }));
    manifest.add_input(&args.input)?;
    manifest.add_artifact(out)?;
    manifest.add_artifact(&cv_path)?;
    manifest.note("best", &outcome.best)?;
    manifest.note("n_train", &outcome.n_train)?;
    manifest.finish(out)?;
    Ok(Done::Ok)
}

fn write_eval(cli: &Cli, args: &EvalArgs, level: Option<f64>) -> Result<Done> {
    let out = require_out(cli)?;
    let model = SvrModel::load(&args.model)?;
    let records = read_dataset(&args.input)?;
    let selected = select_split(&records, args.split.split());
    let (metrics, rows) = evaluate_model(&model, &selected, level.map(|l| (l, cli.seed)))?;
    let measure = selected[0]
        .measure
        .ok_or_else(|| Error::InvalidInput("evaluated records carry no measure".into()))?;
    let artifact = EvalArtifact {
        model_kind: model.kind,
        schema: selected[0].schema.clone(),
        measure,
        dataset: args
            .input
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        split: args.split.split().map(|s| format!("{s:?}")),
        perturbation: level,
        metrics,
    };
    let report_path = sibling(out, REPORT_SUFFIX);
    let csv_path = sibling(out, ".predictions.csv");
    write_atomic(&report_path, serde_json::to_string_pretty(&artifact)?.as_bytes())?;
    write_atomic(&csv_path, predictions_csv(&rows).as_bytes())?;

    let command = if level.is_some() { "perturb-eval" } else { "eval" };
    let mut manifest = RunManifest::new(
        command,
        cli.seed,
        cli.tol,
        cli.workers,
        json!({ "split": format!("{:?}", args.split), "level": level }),
    );
    manifest.add_input(&args.model)?;
    manifest.add_input(&args.input)?;
    manifest.add_artifact(&report_path)?;
    manifest.add_artifact(&csv_path)?;
    manifest.finish(&report_path)?;
    println!(
        "n={} mse={:.4e} r2={:.4} p_over={:.4} mape={}",
        metrics.n,
        metrics.mse,
        metrics.r2,
        metrics.p_over,
        metrics.mape.map(|m| format!("{m:.4}")).unwrap_or_else(|| "n/a".into())
    );
    Ok(Done::Ok)
}

fn predictions_csv(rows: &[PredictionRow]) -> String {
    let mut s = String::from("id,true,predicted,residual\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{}\n", r.id, r.truth, r.predicted, r.residual));
    }
    s
}

fn cmd_report(cli: &Cli, args: &ReportArgs) -> Result<Done> {
    let (md, csv) = render_report(&args.run_dir)?;
    let stem = cli.out.clone().unwrap_or_else(|| args.run_dir.join("report"));
    write_atomic(&sibling(&stem, ".md"), md.as_bytes())?;
    write_atomic(&sibling(&stem, ".csv"), csv.as_bytes())?;
    print!("{md}");
    Ok(Done::Ok)
}

pub fn execute(cli: &Cli) -> Result<i32> {
    if cli.workers == 0 {
        return Err(Error::InvalidInput("--workers must be positive".into()));
    }
    let done = match &cli.command {
        Command::Gen(a) => cmd_gen(cli, a)?,
        Command::Label(a) => cmd_label(cli, a)?,
        Command::Train(a) => cmd_train(cli, a)?,
        Command::Eval(a) => write_eval(cli, a, None)?,
        Command::PerturbEval(a) => write_eval(cli, &a.eval, Some(a.level))?,
        Command::Report(a) => cmd_report(cli, a)?,
    };
    Ok(match done {
        Done::Ok => EXIT_OK,
        Done::BudgetExceeded(n) => {
            eprintln!("{n} records failed to label, over the failure budget");
            EXIT_SOLVER_BUDGET
        }
    })
}

/// Parses `args` (including the program name) and runs the command, returning the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

//! `ltcal`: fit and evaluate temperature-scaling calibrators on logits CSVs.
//!
//! Exit codes: 0 success, 2 usage or validation, 3 I/O, 4 fit failure,
//! 5 model/data dimension mismatch.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ltcal::{AssignmentMode, FusionMode};
use serde::de::DeserializeOwned;

use config::{Method, RunConfig, SelectOn};
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "ltcal",
    version,
    about = "Post-hoc temperature-scaling calibration for long-tailed classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded long-tailed logits CSV.
    Synth(SynthArgs),
    /// Fit a calibrator on a logits CSV and write the model JSON.
    Fit(FitArgs),
    /// Apply a model to a logits CSV and write the metrics report.
    Eval(EvalArgs),
    /// Evaluate dual-branch fusion over a grid of alpha values.
    Sweep(SweepArgs),
    /// Fit every method on one split and compare them on another.
    Report(ReportArgs),
}

fn parse_kebab<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// JSON file with default values for any flag; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitFlags {
    /// Starting temperature of every fit.
    #[arg(long)]
    init_t: Option<f64>,
    /// Stop once the gradient max-norm is at or below this.
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// L-BFGS history size.
    #[arg(long)]
    history: Option<usize>,
    /// Line-search sufficient-decrease constant.
    #[arg(long)]
    armijo: Option<f64>,
}

impl FitFlags {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.init_t = self.init_t;
        cfg.grad_tol = self.grad_tol;
        cfg.max_iter = self.max_iter;
        cfg.history = self.history;
        cfg.armijo = self.armijo;
    }
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    classes: Option<usize>,
    /// Imbalance factor: head count over tail count, >= 1.
    #[arg(long = "if")]
    imbalance_factor: Option<f64>,
    /// Samples in the head class.
    #[arg(long)]
    head: Option<usize>,
    /// True-class logit margin before boosting.
    #[arg(long)]
    separation: Option<f64>,
    /// Logit sharpening at the head class, falling linearly to 1 at the tail.
    #[arg(long)]
    boost: Option<f64>,
    /// Standard deviation of the logit noise.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write a stratified split: this fraction to --output, the rest to --eval-output.
    #[arg(long)]
    split_fraction: Option<f64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    eval_output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Logits CSV to fit on.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Equal-count bins of the per-bin branch.
    #[arg(long)]
    bins: Option<usize>,
    /// Fusion exponent of dual-ts, strictly between 0 and 2.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_parser = parse_kebab::<FusionMode>)]
    fusion: Option<FusionMode>,
    /// Test-time bin assignment stored in the model: boundaries or resort.
    #[arg(long, value_parser = parse_kebab::<AssignmentMode>)]
    assignment: Option<AssignmentMode>,
    #[command(flatten)]
    fit: FitFlags,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Logits CSV to evaluate on.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Bins of both ECE metrics.
    #[arg(long)]
    metric_bins: Option<usize>,
    /// Override the model's test-time bin assignment.
    #[arg(long, value_parser = parse_kebab::<AssignmentMode>)]
    assignment: Option<AssignmentMode>,
    /// Report JSON; reliability CSVs are written next to it.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Dual model whose branches are swept (alternative to --fit-data).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Fit both branches on this CSV (alternative to --model).
    #[arg(long)]
    fit_data: Option<PathBuf>,
    #[arg(long)]
    eval_data: Option<PathBuf>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    metric_bins: Option<usize>,
    /// Comma-separated alpha values; default 0.1,0.2,...,1.9.
    #[arg(long, value_delimiter = ',')]
    alpha_grid: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_kebab::<FusionMode>)]
    fusion: Option<FusionMode>,
    #[arg(long, value_parser = parse_kebab::<AssignmentMode>)]
    assignment: Option<AssignmentMode>,
    #[command(flatten)]
    fit: FitFlags,
    /// Sweep CSV; a JSON sidecar with the same stem names the best alpha.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    fit_data: Option<PathBuf>,
    #[arg(long)]
    eval_data: Option<PathBuf>,
    /// Single CSV split into fit and eval parts (with --split-fraction and --seed).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    split_fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    metric_bins: Option<usize>,
    /// Fixed alpha for dual-ts; otherwise the grid is swept.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    alpha_grid: Option<Vec<f64>>,
    /// Split the alpha sweep is scored on; required unless --alpha is given.
    #[arg(long, value_enum)]
    select_on: Option<SelectOn>,
    #[arg(long, value_parser = parse_kebab::<FusionMode>)]
    fusion: Option<FusionMode>,
    #[arg(long, value_parser = parse_kebab::<AssignmentMode>)]
    assignment: Option<AssignmentMode>,
    #[command(flatten)]
    fit: FitFlags,
    /// Comparison JSON with the report of every method.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Flags as a config, plus the `--config` file to put under them.
fn flags_of(command: &Command) -> (RunConfig, Option<PathBuf>) {
    let mut cfg = RunConfig::default();
    let file = match command {
        Command::Synth(a) => {
            cfg.classes = a.classes;
            cfg.imbalance_factor = a.imbalance_factor;
            cfg.head = a.head;
            cfg.separation = a.separation;
            cfg.boost = a.boost;
            cfg.noise = a.noise;
            cfg.seed = a.seed;
            cfg.split_fraction = a.split_fraction;
            cfg.output = a.output.clone();
            cfg.eval_output = a.eval_output.clone();
            a.config.config.clone()
        }
        Command::Fit(a) => {
            cfg.method = a.method;
            cfg.data = a.data.clone();
            cfg.bins = a.bins;
            cfg.alpha = a.alpha;
            cfg.fusion = a.fusion;
            cfg.assignment = a.assignment;
            a.fit.apply(&mut cfg);
            cfg.output = a.output.clone();
            a.config.config.clone()
        }
        Command::Eval(a) => {
            cfg.model = a.model.clone();
            cfg.data = a.data.clone();
            cfg.metric_bins = a.metric_bins;
            cfg.assignment = a.assignment;
            cfg.output = a.output.clone();
            a.config.config.clone()
        }
        Command::Sweep(a) => {
            cfg.model = a.model.clone();
            cfg.fit_data = a.fit_data.clone();
            cfg.eval_data = a.eval_data.clone();
            cfg.bins = a.bins;
            cfg.metric_bins = a.metric_bins;
            cfg.alpha_grid = a.alpha_grid.clone();
            cfg.fusion = a.fusion;
            cfg.assignment = a.assignment;
            a.fit.apply(&mut cfg);
            cfg.output = a.output.clone();
            a.config.config.clone()
        }
        Command::Report(a) => {
            cfg.fit_data = a.fit_data.clone();
            cfg.eval_data = a.eval_data.clone();
            cfg.data = a.data.clone();
            cfg.split_fraction = a.split_fraction;
            cfg.seed = a.seed;
            cfg.bins = a.bins;
            cfg.metric_bins = a.metric_bins;
            cfg.alpha = a.alpha;
            cfg.alpha_grid = a.alpha_grid.clone();
            cfg.select_on = a.select_on;
            cfg.fusion = a.fusion;
            cfg.assignment = a.assignment;
            a.fit.apply(&mut cfg);
            cfg.output = a.output.clone();
            a.config.config.clone()
        }
    };
    (cfg, file)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (flags, file) = flags_of(&cli.command);
    let cfg = match file {
        Some(path) => RunConfig::load(&path)?.overlay(&flags),
        None => flags,
    };
    match cli.command {
        Command::Synth(_) => commands::synth(&cfg),
        Command::Fit(_) => commands::fit(&cfg),
        Command::Eval(_) => commands::eval(&cfg),
        Command::Sweep(_) => commands::sweep(&cfg),
        Command::Report(_) => commands::report(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

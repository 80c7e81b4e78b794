//! `scd-axes`: fit semantic-change axes and evaluate them on pair (WiC) and
//! diachronic datasets.
//!
//! Exit codes: 0 success, 1 I/O, format or usage error, 2 evaluation
//! undefined on the given data (single class, constant golds, too few
//! targets).

mod commands;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::CliError;

pub const THREADS_ENV: &str = "SCD_AXES_THREADS";

#[derive(Debug, Parser)]
#[command(name = "scd-axes", version, about = "Semantic-change-aware embedding axes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit an axis transform on the rows of a store.
    Fit(FitArgs),
    /// Pair-classification AUC per axis budget, with a Raw baseline.
    EvalWic(EvalWicArgs),
    /// Diachronic change scores: AUC and Spearman per budget, cumulative sweeps.
    EvalTemporal(EvalTemporalArgs),
    /// Per-axis pair-difference matrix as CSV and/or SVG.
    Heatmap(HeatmapArgs),
    /// Write a planted-axis fixture (store plus dataset).
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Raw,
    Pca,
    Ica,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Store directory (meta.json + embeddings.f32) or CSV file.
    store: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// ICA only; defaults to the store dimension.
    #[arg(long)]
    n_components: Option<usize>,
    /// Fit only on rows referenced by this pair dataset.
    #[arg(long, conflicts_with = "temporal")]
    pairs: Option<PathBuf>,
    /// Fit only on rows referenced by this diachronic dataset.
    #[arg(long)]
    temporal: Option<PathBuf>,
    /// Output directory for the transform files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalWicArgs {
    store: PathBuf,
    pairs: PathBuf,
    /// Transform directory written by `fit`.
    #[arg(long)]
    transform: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.1, 0.2, 0.5, 1.0])]
    fractions: Vec<f64>,
    /// Report path; printed to stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Directory for one ROC CSV per evaluated budget.
    #[arg(long)]
    roc_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalTemporalArgs {
    store: PathBuf,
    temporal: PathBuf,
    #[arg(long)]
    transform: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.1, 0.2, 0.5, 1.0])]
    fractions: Vec<f64>,
    /// Occurrences sampled per period, or `none` for all pairs.
    #[arg(long, default_value = "200")]
    cap: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `auto`, `none`, or a comma-separated increasing list of axis counts.
    #[arg(long, default_value = "auto")]
    sweep_grid: String,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Directory for change-score tables (JSON and CSV) and sweep CSVs.
    #[arg(long)]
    tables: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct HeatmapArgs {
    store: PathBuf,
    pairs: PathBuf,
    #[arg(long)]
    transform: PathBuf,
    /// Number of leading axes displayed.
    #[arg(long, default_value_t = scd_axes_core::contextual::DEFAULT_DISPLAY_AXES)]
    axes: usize,
    /// Axis budget the display is taken from.
    #[arg(long, default_value_t = 1.0)]
    fraction: f64,
    /// Min-max normalize each displayed axis to [0, 1].
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// CSV path; printed to stdout when neither output is given.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SynthKind {
    Pairs,
    Temporal,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(value_enum)]
    kind: SynthKind,
    /// Output directory; receives `store/` and `pairs.jsonl` or `temporal.jsonl`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 64)]
    d: usize,
    #[arg(long, default_value_t = 4)]
    signal_axes: usize,
    #[arg(long, default_value_t = 3.0)]
    strength: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Pair instances or diachronic targets (400 / 40 by default).
    #[arg(long)]
    n: Option<usize>,
    /// Occurrences per period (temporal only).
    #[arg(long, default_value_t = 100)]
    occurrences: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Fit(a) => commands::fit(&a),
        Command::EvalWic(a) => commands::eval_wic(&a),
        Command::EvalTemporal(a) => commands::eval_temporal(&a),
        Command::Heatmap(a) => commands::heatmap(&a),
        Command::Synth(a) => commands::synth(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors share code 1 with format errors; 2 is reserved
            // for undefined evaluations.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

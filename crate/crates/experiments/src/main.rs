use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use symsearch_experiments::app::{run, OutputFormat, RunOptions};
use symsearch_experiments::config::{ExperimentConfig, ExperimentKind};
use symsearch_experiments::{ingest, ExperimentError};

/// Symmetry search experiments: power curves, group recovery, estimator
/// comparison and single lattice searches.
#[derive(Parser, Debug)]
#[command(name = "symsearch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; all cores by default.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Svg,
    Both,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rejection rates of the invariance tests against sample size.
    PowerCurve(RunArgs),
    /// Proportions of lattice nodes estimated over replicates.
    GroupRecovery(RunArgs),
    /// Prediction error of plain and symmetrised kernel estimators.
    EstimatorCompare(RunArgs),
    /// One lattice search, written as a status table and a DOT graph.
    Search(RunArgs),
    /// Reads a dataset and prints its shape.
    IngestCheck {
        /// CSV file, or IDX image file when --labels is given.
        path: PathBuf,
        /// IDX label file.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Response column of a CSV file.
        #[arg(long)]
        response: Option<String>,
    },
}

fn execute(kind: ExperimentKind, args: RunArgs) -> Result<(), ExperimentError> {
    let cfg = ExperimentConfig::load(&args.config)?;
    if cfg.experiment.kind != kind {
        return Err(cfg.error_at("kind", "experiment kind does not match the subcommand"));
    }
    let opts = RunOptions {
        out_dir: args.out,
        seed: args.seed,
        format: match args.format {
            Format::Csv => OutputFormat::Csv,
            Format::Svg => OutputFormat::Svg,
            Format::Both => OutputFormat::Both,
        },
    };
    let go = || run(&cfg, &opts);
    let report = match args.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| ExperimentError::Runtime(e.to_string()))?
            .install(go)?,
        None => go()?,
    };
    print!("{}", report.summary);
    for f in &report.files {
        log::info!("wrote {}", f.display());
    }
    Ok(())
}

fn ingest_check(path: PathBuf, labels: Option<PathBuf>, response: Option<String>) -> Result<(), ExperimentError> {
    let data = match labels {
        Some(l) => ingest::read_idx(&path, &l)?,
        None => ingest::read_csv(&path, response.as_deref())?,
    };
    let y = data.responses();
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    println!("rows: {}\nfeatures: {}\nresponse range: [{lo}, {hi}]", data.len(), data.dim());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::PowerCurve(a) => execute(ExperimentKind::PowerCurve, a),
        Command::GroupRecovery(a) => execute(ExperimentKind::GroupRecovery, a),
        Command::EstimatorCompare(a) => execute(ExperimentKind::EstimatorCompare, a),
        Command::Search(a) => execute(ExperimentKind::Search, a),
        Command::IngestCheck { path, labels, response } => ingest_check(path, labels, response),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

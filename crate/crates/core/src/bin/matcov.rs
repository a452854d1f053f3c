use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use matcov::experiments::{emit_report, run_experiment, ExperimentConfig, Mode, OutputFormat};
use matcov::Error;

/// Monte Carlo experiments for sums of random positive semidefinite matrices.
#[derive(Parser)]
#[command(name = "matcov", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error of the empirical mean against the identity, with its trace split.
    Estimate(Common),
    /// Barrier chains: certified versus true extreme eigenvalues.
    Chain(Common),
    /// Failure frequencies of the high-probability bounds for Gaussian matrices.
    Logconcave(Common),
    /// Coordinate-coverage obstruction for the basis ensemble.
    Aubrun(Common),
    /// Projection tail, moment and thin-shell diagnostics.
    Tailcheck(Common),
    /// Deterministic sparsification of a list of PSD matrices.
    Sparsify {
        #[command(flatten)]
        common: Common,
        /// Directory of matrix archives (*.json) to sparsify.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated artifact formats.
    #[arg(long, default_value = "json,csv,svg")]
    format: String,
    /// Overrides `replicas`.
    #[arg(long)]
    replicas: Option<usize>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Exit with status 2 when a checked property fails.
    #[arg(long = "assert")]
    assert_mode: bool,
}

fn run(mode: Mode, common: &Common, input: Option<PathBuf>) -> Result<bool, Error> {
    let mut config = ExperimentConfig::load(&common.config)?;
    if let Some(m) = config.mode.filter(|&m| m != mode) {
        log::warn!("config mode {m:?} replaced by the {mode:?} subcommand");
    }
    config.mode = Some(mode);
    if let Some(seed) = common.seed {
        config.master_seed = seed;
    }
    if let Some(dir) = &common.out {
        config.output_dir = dir.clone();
    }
    if let Some(r) = common.replicas {
        config.replicas = r;
    }
    if input.is_some() {
        config.sparsify.input_dir = input;
    }
    let formats = OutputFormat::parse_list(&common.format)?;
    if let Some(t) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    }

    let start = Instant::now();
    let report = run_experiment(&config)?;
    let elapsed = start.elapsed().as_secs_f64();
    let paths = emit_report(&report, &formats, &config.output_dir)?;
    eprintln!("{} finished in {elapsed:.2} s", mode.file_stem());
    for p in &paths {
        eprintln!("wrote {}", p.display());
    }
    let failures = report.assertion_failures();
    for f in &failures {
        eprintln!("check failed: {f}");
    }
    Ok(failures.is_empty() || !common.assert_mode)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Estimate(c) => run(Mode::CovarianceError, c, None),
        Command::Chain(c) => run(Mode::Chain, c, None),
        Command::Logconcave(c) => run(Mode::LogConcave, c, None),
        Command::Aubrun(c) => run(Mode::Aubrun, c, None),
        Command::Tailcheck(c) => run(Mode::TailCheck, c, None),
        Command::Sparsify { common, input } => run(Mode::Sparsify, common, input.clone()),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_certificate_failure() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

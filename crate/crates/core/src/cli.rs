//! Command-line front end. Exit codes: 0 success, 2 config or usage error,
//! 3 io error, 1 anything else.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::harness::{self, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "her-lab", version, about = "Hindsight relabeling experiments on tabular multi-goal tasks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train every configured strategy for one seed and write run CSVs.
    Run(RunArgs),
    /// Train strategy x seed in parallel, then write summary.csv.
    Sweep(SweepArgs),
    /// Train with periodic value probes and write the probe CSV.
    Probe(RunArgs),
    /// Rebuild summary.csv from the run CSVs already in an output directory.
    Summarize(SummarizeArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's seed list.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Success-rate level for steps-to-threshold; the config's when absent.
    #[arg(long)]
    pub threshold: Option<f64>,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::InvalidArgument(_) => EXIT_CONFIG,
        Error::Io { .. } => EXIT_IO,
        Error::InvalidTransition(_) | Error::InvalidState(_) => EXIT_FAILURE,
    }
}

fn load(path: &std::path::Path, seed: Option<u64>) -> Result<ExperimentConfig, Error> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = seed {
        config.seeds = vec![seed];
    }
    Ok(config)
}

fn execute(command: Command) -> Result<i32, Error> {
    match command {
        Command::Run(args) => {
            let config = load(&args.config, args.seed)?;
            for kind in config.strategies() {
                let single = config.with_strategy(kind);
                for &seed in &config.seeds {
                    let record = harness::run_experiment(&single, seed)?;
                    let path = harness::write_run(&args.out, &single, &record)?;
                    println!(
                        "{kind} seed {seed}: max success rate {:.3} -> {}",
                        record.max_success_rate(),
                        path.display()
                    );
                }
            }
            Ok(EXIT_OK)
        }
        Command::Sweep(args) => {
            let config = load(&args.config, args.seed)?;
            let outcome = harness::sweep(&config, &args.out, args.jobs)?;
            for row in &outcome.summary {
                println!(
                    "{}: max SR {:.3} +- {:.3} over {} seeds",
                    row.strategy, row.max_sr_mean, row.max_sr_std, row.n_seeds
                );
            }
            if outcome.failures.is_empty() {
                return Ok(EXIT_OK);
            }
            let mut code = EXIT_FAILURE;
            for (kind, seed, err) in &outcome.failures {
                eprintln!("error: {kind} seed {seed}: {err}");
                code = code.max(exit_code(err));
            }
            Ok(code)
        }
        Command::Probe(args) => {
            let config = load(&args.config, args.seed)?;
            if config.probe.is_none() {
                return Err(Error::config("probe", "config has no probe section"));
            }
            for kind in config.strategies() {
                let single = config.with_strategy(kind);
                for &seed in &config.seeds {
                    let (outcome, path) = harness::run_probe(&single, seed, &args.out)?;
                    harness::write_run(&args.out, &single, &outcome.record)?;
                    println!(
                        "{kind} seed {seed}: {} snapshots -> {}",
                        outcome.probes.len(),
                        path.display()
                    );
                }
            }
            Ok(EXIT_OK)
        }
        Command::Summarize(args) => {
            let rows = harness::summarize_dir(&args.out, args.threshold)?;
            let path = harness::write_summary(&args.out, &rows)?;
            println!("{} rows -> {}", rows.len(), path.display());
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

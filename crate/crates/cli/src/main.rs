//! `beliefplay`: runs the experiments described by a configuration document.
//!
//! Exit codes: 0 success, 1 usage or invalid configuration, 2 run or
//! analysis error, 3 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use beliefplay::error::Error;
use beliefplay::experiment::{
    cmd_fixed_points, cmd_rate, cmd_run, cmd_stability, parse_config, ExperimentConfig, DEFAULT_OUTPUT,
};
use clap::{Args, Parser, Subcommand};
use log::info;

const EXIT_USAGE: u8 = 1;
const EXIT_RUN: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "beliefplay", version, about = "Learning dynamics with unknown payoff parameters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one trajectory per seed; writes seed_<k>/trajectory.csv and seed_<k>/summary.json.
    Run(Common),
    /// Enumerate fixed points and check completeness and global stability; writes fixed_points.json.
    FixedPoints(Common),
    /// Local-stability suite at one fixed-point cluster; writes stability_report.json.
    Stability(Common),
    /// Decay rate of one parameter's weight over the seeds; writes rate.json.
    Rate(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration document (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory (overrides the document's "output").
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for seed sweeps and Monte Carlo runs (default: all cores).
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    /// Replace the master seed of the document.
    #[arg(long, value_name = "K")]
    seed_override: Option<u64>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_RUN,
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn execute(command: Command) -> Result<Vec<PathBuf>, Error> {
    let (common, run): (Common, fn(&ExperimentConfig, &Path) -> beliefplay::error::Result<Vec<PathBuf>>) =
        match command {
            Command::Run(c) => (c, cmd_run),
            Command::FixedPoints(c) => (c, cmd_fixed_points),
            Command::Stability(c) => (c, cmd_stability),
            Command::Rate(c) => (c, cmd_rate),
        };
    let mut cfg = load(&common.config)?;
    if let Some(seed) = common.seed_override {
        cfg = cfg.with_seed_override(seed);
    }
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| Error::Config(vec![format!("--threads: {e}")]))?;
    }
    let out = common
        .out
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));
    info!(
        "game {} with config hash {} and master seed {}",
        cfg.game,
        cfg.hash(),
        cfg.master_seed()
    );
    run(&cfg, &out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

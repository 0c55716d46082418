//! `cgdyn <command> --config <path> [--seed N] [--out DIR] [--workers K]`
//!
//! Exit codes: 0 ok, 2 config error, 3 numeric failure, 4 insufficient
//! samples.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cgdyn::cli::{run, Command, RunConfig};

#[derive(Parser)]
#[command(name = "cgdyn", about = "Effective dynamics for scalar reaction coordinates", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Run configuration file (line-oriented `key = value`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config's random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for artifacts (default: config `out_dir` or `.`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread count (default: config `workers` or all cores).
    /// Never affects results, only wall time.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate the effective coefficients b, sigma and A' over a grid.
    EstimateCoefficients(Common),
    /// Integrate one trajectory (full or reduced) and write it as CSV.
    Simulate(Common),
    /// Residence-time study across dynamics kinds.
    Residence(Common),
    /// Coupled pathwise deviation per epsilon.
    Pathwise(Common),
    /// Time-marginal distance between full and effective ensembles.
    Marginals(Common),
    /// Run the invariant suite on the builtin models.
    Check(Common),
}

impl Cmd {
    fn split(&self) -> (Command, &Common) {
        match self {
            Cmd::EstimateCoefficients(c) => (Command::EstimateCoefficients, c),
            Cmd::Simulate(c) => (Command::Simulate, c),
            Cmd::Residence(c) => (Command::Residence, c),
            Cmd::Pathwise(c) => (Command::Pathwise, c),
            Cmd::Marginals(c) => (Command::Marginals, c),
            Cmd::Check(c) => (Command::Check, c),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = cli.command.split();

    let mut config = match &common.config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(e.exit_code() as u8);
            }
        },
        None if command == Command::Check => RunConfig::default(),
        None => {
            eprintln!("error: --config is required for `{}`", command.name());
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = common.seed {
        config.set("seed", seed.to_string());
    }

    let workers = common.workers.or_else(|| {
        config
            .get("workers")
            .and_then(|w| w.parse::<usize>().ok())
    });
    if let Some(w) = workers {
        if w > 0 {
            // ignore the error if a pool already exists (e.g. under tests)
            let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
        }
    }

    let out_dir = common
        .out
        .clone()
        .or_else(|| config.get("out_dir").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    match run(command, &config, &out_dir) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

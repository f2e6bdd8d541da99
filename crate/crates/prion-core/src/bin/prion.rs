//! Batch front door: parses a run configuration, executes one subcommand,
//! and writes its artifacts into the output directory.

use clap::{Parser, Subcommand};
use prion_core::config::parse_config;
use prion_core::output::write_failure;
use prion_core::runner;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "prion", version, about = "Conservative solver and verification harness for a prion growth-fragmentation-coagulation model")]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for the randomized diagnostic drivers; the solver itself is
    /// deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for independent runs (refinement ladders).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the coupled system and write moment and balance tables.
    Simulate,
    /// Audit the rate set against the uniqueness hypotheses.
    CheckHypotheses,
    /// Compare a simulation against the closed moment oracle.
    OracleCompare,
    /// Track the weighted distance between a run and a perturbed run.
    ProbeUniqueness,
    /// Evaluate weak-form residuals for random bounded test vectors.
    Residuals,
    /// Run the factor-2 refinement ladder against the oracle.
    Convergence,
}

impl Command {
    fn subcommand(&self) -> runner::Subcommand {
        match self {
            Command::Simulate => runner::Subcommand::Simulate,
            Command::CheckHypotheses => runner::Subcommand::CheckHypotheses,
            Command::OracleCompare => runner::Subcommand::OracleCompare,
            Command::ProbeUniqueness => runner::Subcommand::ProbeUniqueness,
            Command::Residuals => runner::Subcommand::Residuals,
            Command::Convergence => runner::Subcommand::Convergence,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (Some(config_path), Some(out_dir)) = (cli.config.as_ref(), cli.out.as_ref()) else {
        eprintln!("error: --config and --out are required");
        return ExitCode::from(2);
    };

    let text = match std::fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config_path.display());
            return ExitCode::FAILURE;
        }
    };
    let base_dir = config_path.parent().unwrap_or_else(|| std::path::Path::new("."));
    let config = match parse_config(&text, base_dir) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            if std::fs::create_dir_all(out_dir).is_ok() {
                write_failure(out_dir, &e.to_string());
            }
            return ExitCode::FAILURE;
        }
    };

    match runner::run(cli.command.subcommand(), &config, out_dir, cli.seed, cli.threads) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            write_failure(out_dir, &e.to_string());
            ExitCode::FAILURE
        }
    }
}

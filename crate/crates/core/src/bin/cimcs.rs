//! `cimcs` command-line interface.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cimcs::harness::{cmd_gen, cmd_mri, cmd_oracle, cmd_run, cmd_sweep, Context, ExperimentConfig};
use cimcs::CimError;

#[derive(Parser)]
#[command(name = "cimcs", version, about = "Coherent Ising machine compressed-sensing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate seeded instance files and a manifest.
    Gen(Common),
    /// Run a support-only, altmin or sa-compare experiment.
    Run(Common),
    /// Run a parameter sweep.
    Sweep(Common),
    /// Reconstruct an MRI image.
    Mri(Common),
    /// Compare against exhaustive search on small instances.
    Oracle(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; overrides the config.
    #[arg(long, env = "CIMCS_WORKERS")]
    workers: Option<usize>,
}

const EXIT_RUN_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (&Common, fn(&Context) -> cimcs::Result<cimcs::harness::Report>) = match &cli.command {
        Command::Gen(c) => (c, cmd_gen),
        Command::Run(c) => (c, cmd_run),
        Command::Sweep(c) => (c, cmd_sweep),
        Command::Mri(c) => (c, cmd_mri),
        Command::Oracle(c) => (c, cmd_oracle),
    };
    let ctx = ExperimentConfig::load(&common.config)
        .and_then(|(cfg, text)| Context::new(cfg, text, common.seed, common.out.clone(), common.workers));
    let ctx = match ctx {
        Ok(c) => c,
        Err(e) => {
            eprintln!("cimcs: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(&ctx) {
        Ok(report) => {
            println!("{}", report.summary);
            for f in &report.files {
                println!("  {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e @ CimError::Config(_)) => {
            eprintln!("cimcs: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("cimcs: {e}");
            ExitCode::from(EXIT_RUN_FAILURE)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use viscoctl::commands::{run_control, run_diagnostics, run_resolvent, run_simulate};
use viscoctl::{exit_code, ExperimentConfig};

#[derive(Parser)]
#[command(
    version,
    about = "Boundary-control experiments for viscoelastic beams and plates"
)]
struct Cli {
    /// Experiment file (TOML).
    #[arg(long, global = true, default_value = "experiment.toml")]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resolvent kernel and its residual.
    Resolvent,
    /// Forward simulation of the controlled system.
    Simulate,
    /// Minimum-norm control synthesis and verification.
    Control {
        /// Include the memory kernel (otherwise the elastic system is controlled).
        #[arg(long)]
        visco: bool,
    },
    /// Trace normalization, Gram spectra, compactness and annihilator checks.
    Diagnostics,
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = ExperimentConfig::load(&cli.config)?;
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    match cli.command {
        Command::Resolvent => run_resolvent(&cfg, &out).map(drop),
        Command::Simulate => run_simulate(&cfg, &out).map(drop),
        Command::Control { visco } => run_control(&cfg, &out, visco).map(drop),
        Command::Diagnostics => run_diagnostics(&cfg, &out).map(drop),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}

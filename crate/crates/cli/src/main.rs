//! `polaron`: assemble, solve, scan and check the fibre Hamiltonian of a
//! Dirac particle coupled to a quantized field on a finite grid.

mod commands;
mod config;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::output::Emitter;

#[derive(Parser)]
#[command(name = "polaron", version, about = "Spectral lab for the Dirac polaron fibre Hamiltonian")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the `output` key.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the sparse Hamiltonian and write it as triplets.
    Assemble(Common),
    /// Lowest eigenvalues at the configured parameters.
    Solve(Common),
    /// Ground-state energy along the configured scan line.
    Scan(Common),
    /// Run property checks: `all` or a comma-separated list.
    Check {
        /// Defaults to the `checks` key of the configuration.
        which: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Dispersion gaps E(p − k) − E(p) against their bounds.
    Dispersion(Common),
    /// Infrared sum and the coupling threshold it implies.
    Ir(Common),
    /// Rotation-sector decomposition of the spectrum.
    Sectors(Common),
}

fn load(common: &Common) -> Result<(RunConfig, Emitter)> {
    let cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::parse("")?,
    };
    let dir = common.output.clone().unwrap_or_else(|| cfg.output.clone());
    let emitter = Emitter::new(&dir, &cfg.lines)?;
    Ok((cfg, emitter))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Assemble(c) => {
            let (cfg, mut out) = load(&c)?;
            commands::assemble_cmd(&cfg, &mut out)
        }
        Command::Solve(c) => {
            let (cfg, mut out) = load(&c)?;
            commands::solve_cmd(&cfg, &mut out)
        }
        Command::Scan(c) => {
            let (cfg, mut out) = load(&c)?;
            commands::scan_cmd(&cfg, &mut out)
        }
        Command::Check { which, common } => {
            let (cfg, mut out) = load(&common)?;
            let names: Vec<String> = match which {
                Some(list) => list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect(),
                None => cfg.checks.clone(),
            };
            commands::check_cmd(&cfg, &names, &mut out)
        }
        Command::Dispersion(c) => {
            let (cfg, mut out) = load(&c)?;
            commands::dispersion_cmd(&cfg, &mut out)
        }
        Command::Ir(c) => {
            let (cfg, mut out) = load(&c)?;
            commands::ir_cmd(&cfg, &mut out)
        }
        Command::Sectors(c) => {
            let (cfg, mut out) = load(&c)?;
            commands::sectors_cmd(&cfg, &mut out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

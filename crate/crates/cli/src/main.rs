//! Batch front end: reads a scenario config, dispatches to the model
//! solvers, and writes trajectory tables and machine-readable reports.
//!
//! Exit codes: 0 success, 2 missing or unreadable file, 3 config parse or
//! validation failure, 4 solver failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use econodyn::error::CliError;
use econodyn::scenario::{self, Overrides};
use econodyn::config;

#[derive(Parser)]
#[command(
    name = "econodyn",
    about = "Macroeconomic dynamics via integral equations: batch scenario runner",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config (any kind) and write its artifacts.
    Run {
        /// Path to the scenario JSON.
        config: PathBuf,
        /// Override the grid segment count.
        #[arg(long)]
        grid: Option<usize>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON file with sweep variants (balance-sweep only).
        #[arg(long)]
        variants: Option<PathBuf>,
    },
    /// Run the matrix health checks of a `diagnose` config.
    Diagnose {
        /// Path to the scenario JSON (kind must be "diagnose").
        config: PathBuf,
        /// Override the grid segment count.
        #[arg(long)]
        grid: Option<usize>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run {
            config,
            grid,
            out,
            variants,
        } => {
            let file = config::load_scenario(&config)?;
            let variants = match variants {
                Some(path) => Some(config::load_variants(&path)?),
                None => None,
            };
            let outcome = scenario::run(&file, &Overrides { grid, out, variants })?;
            for path in outcome.files {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Diagnose { config, grid, out } => {
            let file = config::load_scenario(&config)?;
            let outcome = scenario::run_diagnose_entry(
                &file,
                &Overrides {
                    grid,
                    out,
                    variants: None,
                },
            )?;
            for path in outcome.files {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

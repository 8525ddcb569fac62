use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod inputs;

use config::Config;
use error::EXIT_INVALID;

/// Recognize food items on buffet tray photos and evaluate the results.
#[derive(Debug, Parser)]
#[command(name = "foodtray", version)]
struct Cli {
    /// TOML file with defaults for any flag; flags given here win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Predict the items on each tray and write one JSON line per tray.
    Recognize(commands::recognize::Args),
    /// Score predictions against ground truth.
    Evaluate(commands::evaluate::Args),
    /// Cross-validate the threshold of the multi-class baseline.
    TuneThreshold(commands::tune::Args),
    /// Write a synthetic dataset with known ground truth.
    Generate(commands::generate::Args),
}

fn run(cli: Cli) -> error::CliResult<()> {
    let config = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Recognize(args) => commands::recognize::run(args, &config),
        Command::Evaluate(args) => commands::evaluate::run(args, &config),
        Command::TuneThreshold(args) => commands::tune::run(args, &config),
        Command::Generate(args) => commands::generate::run(args, &config),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INVALID)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}

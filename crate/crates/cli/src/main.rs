//! Command-line front end for Bayesian compositional regression.
//!
//! Exit codes: 0 success, 1 usage/configuration error, 2 data error,
//! 3 convergence failure.

mod commands;
mod error;
mod ingest;
mod table;

use clap::Parser;

use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "compreg",
    version,
    about = "Bayesian compositional regression via the additive log-ratio transform"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Subcommand)]
enum Command {
    /// ALR-transform component columns of a CSV, preserving other columns
    Transform(commands::transform::TransformArgs),
    /// Fit the regression by MCMC; writes summaries, draws, and criteria
    Fit(commands::fit::FitArgs),
    /// Run a replicated simulation study from a scenario JSON
    Simulate(commands::simulate::SimulateArgs),
    /// Refit under one-at-a-time prior substitutions and report deltas
    Sensitivity(commands::sensitivity::SensitivityArgs),
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Transform(args) => commands::transform::run(args),
        Command::Fit(args) => commands::fit::run(args),
        Command::Simulate(args) => commands::simulate::run(args),
        Command::Sensitivity(args) => commands::sensitivity::run(args),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    std::process::exit(0);
                }
                _ => {
                    eprint!("{e}");
                    std::process::exit(1);
                }
            }
        }
    };
    if let Err(e) = dispatch(&cli) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod options;
mod output;
mod svg;

use options::Options;

/// Bayesian comparison and averaging of small-area binomial models.
#[derive(Debug, Parser)]
#[command(name = "smallarea", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the normal-logit and beta grids and report their summaries.
    Fit(Options),
    /// Compare the posterior deviance distributions of all four models.
    Compare(Options),
    /// Per-area posterior densities under the local, normal and beta models.
    Areas(Options),
    /// Model-averaged area and typical-area densities.
    Average(Options),
    /// Everything above.
    Run(Options),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(o) => output::execute(&o, output::Stages::FIT),
        Command::Compare(o) => output::execute(&o, output::Stages::COMPARE),
        Command::Areas(o) => output::execute(&o, output::Stages::AREAS),
        Command::Average(o) => output::execute(&o, output::Stages::AVERAGE),
        Command::Run(o) => output::execute(&o, output::Stages::ALL),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

//! `fisherlab`: Fisher-information computations from the command line.
//!
//! Exit codes: 0 success, 2 configuration or schema error, 3 computation error.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Flags, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "fisherlab", version, about = "Classical and quantum Fisher information of parametrized circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classical Fisher information of a measured circuit (methods: exact, sampled).
    Cfim(Flags),
    /// Quantum Fisher information (methods: exact, param-shift, spsa, fd-projection, mixed).
    Qfim(Flags),
    /// Minimize an observable (methods: gd, qng, spsa-qng); writes a JSONL or CSV trace.
    Qng(Flags),
    /// Phase-sensing scaling scan, or a maximum-likelihood experiment with --mle.
    Sense(Flags),
    /// QFIM (or CFIM) eigenvalues and effective dimension.
    Spectrum(Flags),
}

/// Error with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<fisherlab::Error> for CliError {
    fn from(e: fisherlab::Error) -> Self {
        use fisherlab::Error as E;
        let code = match e {
            E::Schema(_)
            | E::InvalidCircuit(_)
            | E::InvalidGenerator(_)
            | E::DimensionMismatch { .. }
            | E::ParamIndexOutOfRange { .. }
            | E::InvalidMeasurement(_)
            | E::InvalidArgument(_) => 2,
            _ => 3,
        };
        Self { code, message: e.to_string() }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (flags, f): (&Flags, fn(&RunConfig) -> Result<commands::Output, CliError>) = match &cli.command {
        Command::Cfim(a) => (a, commands::cfim),
        Command::Qfim(a) => (a, commands::qfim),
        Command::Qng(a) => (a, commands::qng),
        Command::Sense(a) => (a, commands::sense),
        Command::Spectrum(a) => (a, commands::spectrum),
    };
    let cfg = RunConfig::from_flags(flags)?;
    let output = f(&cfg)?;
    output.write(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

//! Batch front end: CSV tables for truncated-CGF curves, Dirichlet boxes,
//! ion-channel sojourn densities and tail diagnostics.

mod curve;
mod diagnose;
mod dirichlet;
mod error;
mod ionchannel;
mod output;
mod selftest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "trunc-cgf", version, about = "Saddlepoint approximations for truncated CGFs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Truncated CGF (or a derivative) of each method over a theta grid.
    Curve(curve::CurveArgs),
    /// Rectangle probabilities of Dirichlet vectors.
    Dirichlet(dirichlet::DirichletArgs),
    /// Observed-sojourn densities of a two-state channel with omitted short residences.
    Ionchannel(ionchannel::IonChannelArgs),
    /// Derivative-ratio conditions of a CGF near its strip edges.
    Diagnose(diagnose::DiagnoseArgs),
    /// Quadrature identities of the exact oracle.
    Selftest,
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Curve(a) => curve::run(a),
        Command::Dirichlet(a) => dirichlet::run(a),
        Command::Ionchannel(a) => ionchannel::run(a),
        Command::Diagnose(a) => diagnose::run(a),
        Command::Selftest => selftest::run(),
    }
}

/// One tab-separated line on stderr.
fn report(err: &CliError) {
    let message = err.to_string().replace(['\n', '\t'], " ");
    eprintln!("error\tkind={}\tmessage={}", err.kind(), message.trim());
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // Help and version requests.
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first: Vec<&str> = text.lines().take_while(|l| !l.trim().is_empty()).map(str::trim).collect();
            report(&CliError::Usage(first.join(" ").trim_start_matches("error: ").to_string()));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::FAILURE
        }
    }
}

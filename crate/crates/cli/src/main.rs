//! `tnforms`: build t-n bases and finite element forms, verify their identities,
//! and assemble the de Rham complex on a mesh.
//!
//! Exit codes: 0 when everything passes, 1 when a verification fails, 2 on usage
//! or I/O errors.

mod commands;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "tnforms", version, about = "Tangential-normal bases and polynomial differential forms on simplices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump the primal, dual and Hodge t-n bases anchored at every s-dimensional sub-simplex.
    Basis(BasisArgs),
    /// Run the invariant suite on seeded random simplices.
    Verify(VerifyArgs),
    /// Assemble derivative and mass matrices on a mesh and report cohomology ranks.
    Assemble(AssembleArgs),
    /// Print dimension counts for a space, and mesh statistics when a mesh is given.
    Info(InfoArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SimplexChoice {
    Reference,
    Random,
}

#[derive(Args)]
struct BasisArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    s: usize,
    #[arg(long, value_enum, default_value_t = SimplexChoice::Reference)]
    simplex: SimplexChoice,
    /// Seed for `--simplex random`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    r: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Override the residual tolerance of the pointwise identities.
    #[arg(long)]
    tol: Option<f64>,
    /// Flip the sign in the trace-duality identity; that check must then fail.
    #[arg(long)]
    inject_fault: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AssembleArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Polynomial degree of the last space; slot j has degree r + k − j.
    #[arg(long)]
    r: usize,
    /// Last form degree of the complex (defaults to the mesh dimension).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for the Matrix Market files and `report.json`.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Reverse the tangent orientation of cell 0; conformity must then fail.
    #[arg(long)]
    inject_fault: bool,
}

#[derive(Args)]
struct InfoArgs {
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Why a command did not produce a passing report.
#[derive(Debug)]
pub enum Failure {
    /// Bad parameters or unreadable input.
    Usage(String),
    /// The report was produced but some check failed.
    Verification(String),
}

impl From<tnforms::Error> for Failure {
    fn from(e: tnforms::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let result = match cli.command {
        Command::Basis(a) => commands::basis(&a),
        Command::Verify(a) => verify::run(&a),
        Command::Assemble(a) => commands::assemble(&a),
        Command::Info(a) => commands::info(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("FAIL: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

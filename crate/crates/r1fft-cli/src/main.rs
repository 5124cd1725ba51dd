// Batch experiment driver: tables, error sweeps, sparse detection, and
// direct wrappers around set generation, lattice search, and the
// coefficient oracles. Exit codes: 0 success, 2 partial, 1 hard failure.

mod commands;
mod output;
mod plan;
mod svg;
mod sweep;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "r1fft",
    version,
    about = "Fourier approximation experiments on transformed rank-1 lattices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cardinalities and reconstructing lattice sizes of the d=2, N=4 reference sets
    Table1(plan::Table1Args),
    /// Relative error decay of the product bell over a frequency set family
    Sweep(Box<plan::SweepArgs>),
    /// Dimension-incremental sparse frequency detection on the product bell
    Sparse(plan::SparseArgs),
    /// Search one reconstructing lattice and report it as JSON
    Lattice(plan::LatticeArgs),
    /// Enumerate one frequency set
    Freqset(plan::FreqsetArgs),
    /// Transformed Fourier coefficients of the 1-d bell 1/(1+y^2)
    Coeffs(plan::CoeffsArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let run = match cli.command {
        Command::Table1(args) => commands::table1(args),
        Command::Sweep(args) => sweep::run(*args),
        Command::Sparse(args) => commands::sparse(args),
        Command::Lattice(args) => commands::lattice(args),
        Command::Freqset(args) => commands::freqset(args),
        Command::Coeffs(args) => commands::coeffs(args),
    };
    match run {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

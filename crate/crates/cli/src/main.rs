//! `intertwiner`: classify spectra, build conserved operators, and measure
//! their conservation under continuous and stroboscopic evolution.
//!
//! Exit codes: 0 success, 1 input error, 2 numerical failure, 3 no
//! symmetry or seed found.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "intertwiner", version, about = "Conserved observables of non-Hermitian Hamiltonians")]
pub struct Cli {
    /// Relative tolerance for rank and residual decisions.
    #[arg(long, global = true, env = "INTERTWINER_TOL", default_value_t = intertwiner::DEFAULT_TOL)]
    pub tol: f64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Spectral,
    Recursive,
    Nullspace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    PtSpin,
    HatanoNelson,
    Circuit,
    Dimer,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues, degeneracy clusters and spectrum symmetries.
    Analyze {
        matrix: PathBuf,
        /// Write the report here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Construct the conserved operators of a Hamiltonian.
    Conserve {
        matrix: PathBuf,
        /// Angle of `ηH = e^{iφ}H†η`; defaults to the file's first symmetry, else 0.
        #[arg(long, allow_hyphen_values = true)]
        phi: Option<f64>,
        /// Use the chiral relation `ηH = −Hη` instead.
        #[arg(long, conflicts_with = "phi")]
        anticommute: bool,
        #[arg(long, value_enum, default_value_t = Method::Nullspace)]
        method: Method,
        /// `auto` or a matrix file holding η₁ (recursive method only).
        #[arg(long, default_value = "auto")]
        seed: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Evolve a state and record conservation drift as CSV.
    Evolve {
        matrix: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        tmax: f64,
        #[arg(long, default_value_t = 2001)]
        steps: usize,
        /// A matrix, a list of matrices, or `conserve` output.
        #[arg(long)]
        etas: PathBuf,
        /// Uniform decay rate Γ of a passive Hamiltonian `H − iΓ𝟙`.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        gamma_shift: f64,
        #[arg(long, default_value = "drift.csv")]
        output: PathBuf,
    },
    /// Write a named model Hamiltonian with its seed and symmetries.
    Model {
        #[arg(value_enum)]
        name: ModelName,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        coupling: f64,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        /// Mutual inductance of the circuit model.
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// One-period propagator, stroboscopic conserved operators and their
    /// per-period expectation values.
    Floquet {
        segments: PathBuf,
        #[arg(long, default_value_t = 100)]
        periods: usize,
        /// Initial state; defaults to the uniform superposition.
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

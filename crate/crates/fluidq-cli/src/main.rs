//! Command-line surface of the fluid-queue solver suite.
//!
//! Exit codes: 0 on success, 2 for usage/input errors, 3 for numeric
//! failures.

mod commands;
mod points;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "fluidq",
    about = "Componentwise-accurate stationary analysis of Markov-modulated fluid queues",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SolverOptions {
    /// Solver variant: comp (componentwise accurate), xxl, or glx
    #[arg(long, default_value = "comp")]
    variant: String,
    /// Initialization scheme: sda, sda-ss, or adda
    #[arg(long, default_value = "sda")]
    scheme: String,
    /// Safety factor applied to the optimal initialization parameters
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    /// Use the fully subtraction-free parameter choice instead of eta-scaled
    /// optimal values
    #[arg(long, default_value_t = false)]
    subtraction_free: bool,
    /// Componentwise stopping tolerance (default: n * machine epsilon)
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the Riccati equation and write the return-probability matrix
    Solve {
        /// Model file
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        solver: SolverOptions,
        /// Output CSV for the solution matrix
        #[arg(long, short = 'o', default_value = "psi.csv")]
        output: PathBuf,
        /// Also write the dual return matrix next to the output
        #[arg(long, default_value_t = false)]
        emit_psi_hat: bool,
    },
    /// Evaluate the stationary density at the requested levels
    Density {
        #[arg(long)]
        model: PathBuf,
        /// Levels: a comma list like `0.5,1,2` or `logrange(1e-2,1e6,100)`
        #[arg(long)]
        points: String,
        #[command(flatten)]
        solver: SolverOptions,
        #[arg(long, short = 'o', default_value = "density.csv")]
        output: PathBuf,
        /// Also emit per-level errors of all three variants against the
        /// extended-precision reference pipeline
        #[arg(long, default_value_t = false)]
        errors: bool,
        /// Reference precision in decimal digits (with --errors)
        #[arg(long, default_value_t = 50)]
        digits: usize,
    },
    /// Score all three variants against the extended-precision reference
    Compare {
        #[arg(long)]
        model: PathBuf,
        /// Reference precision in decimal digits (>= 50)
        #[arg(long, default_value_t = 50)]
        digits: usize,
        #[command(flatten)]
        solver: SolverOptions,
        #[arg(long, short = 'o', default_value = "compare.csv")]
        output: PathBuf,
        /// Also write the signed entrywise relative-error matrix per variant
        #[arg(long, default_value_t = false)]
        error_matrix: bool,
    },
    /// Write a built-in example model, optionally sweeping its rate
    Example {
        /// `weakly-connected` or `cascading`
        #[arg(long)]
        name: String,
        /// Fluid rate of the cascading model's rare state
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        /// Output model file (defaults to ex61.fq / ex62.fq)
        #[arg(long, short = 'o')]
        output: Option<PathBuf>,
        /// For the cascading model: run the accuracy comparison over
        /// kappa = 1e0 .. 1e8 and write the sweep data
        #[arg(long, default_value_t = false)]
        sweep: bool,
        #[arg(long, default_value_t = 50)]
        digits: usize,
        #[arg(long, default_value = "figure5.csv")]
        sweep_output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = std::env::var("FLUIDQ_THREADS").ok().and_then(|s| s.parse::<usize>().ok());
    let outcome = fluidq::parallel::with_thread_cap(threads, || match cli.command {
        Command::Solve { model, solver, output, emit_psi_hat } => {
            commands::solve(&model, &solver, &output, emit_psi_hat)
        }
        Command::Density { model, points, solver, output, errors, digits } => {
            commands::density(&model, &points, &solver, &output, errors, digits)
        }
        Command::Compare { model, digits, solver, output, error_matrix } => {
            commands::compare(&model, digits, &solver, &output, error_matrix)
        }
        Command::Example { name, kappa, output, sweep, digits, sweep_output } => {
            commands::example(&name, kappa, output.as_deref(), sweep, digits, &sweep_output)
        }
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => ExitCode::from(e.exit_code()),
    }
}

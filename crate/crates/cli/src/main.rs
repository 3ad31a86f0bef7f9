use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Validate, dilate and simulate quantum stochastic completely positive
/// cocycles on matrix algebras.
///
/// Exit codes: 0 pass, 1 rejected, 2 parse or grid error, 3 residual
/// failure, 4 Picard non-contraction.
#[derive(Debug, Parser)]
#[command(name = "cocycle", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check symmetry, conditional complete positivity and normalization of a generator file.
    Validate(ValidateArgs),
    /// Recover Hudson–Parthasarathy coefficients from a generator file.
    Dilate(DilateArgs),
    /// Build the generator file of a coefficient file.
    Assemble(AssembleArgs),
    /// Integrate coherent matrix elements and write a CSV trace.
    Simulate(SimulateArgs),
    /// Run a numerical check and print a JSON summary.
    #[command(subcommand)]
    Check(CheckCommand),
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Generator file.
    path: PathBuf,
    /// Relative tolerance on the smallest dissipator eigenvalue.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Monte Carlo cross-check trials (0 disables it).
    #[arg(long, default_value_t = 500)]
    trials: usize,
    /// Seed of the Monte Carlo cross-check.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct DilateArgs {
    /// Generator file.
    path: PathBuf,
    /// Output coefficient file.
    #[arg(short, long)]
    output: PathBuf,
    /// Relative Choi cutoff and round-trip tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Debug, Args)]
struct AssembleArgs {
    /// Coefficient file.
    path: PathBuf,
    /// Output generator file.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Solver {
    Transfer,
    Ode,
    Picard,
    Expm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Reference {
    Expm,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Coefficient file.
    params: PathBuf,
    /// Time horizon.
    #[arg(long = "T", default_value_t = 1.0)]
    horizon: f64,
    /// Number of grid steps.
    #[arg(long, default_value_t = 256)]
    steps: usize,
    #[arg(long, value_enum, default_value_t = Solver::Transfer)]
    solver: Solver,
    /// Picard iterations.
    #[arg(long, default_value_t = 25)]
    iters: usize,
    /// Observable file (JSON matrix); defaults to the identity.
    #[arg(long)]
    observable: Option<PathBuf>,
    /// Bra coherent function file; defaults to the vacuum.
    #[arg(long)]
    f: Option<PathBuf>,
    /// Ket coherent function file; defaults to the vacuum.
    #[arg(long)]
    h: Option<PathBuf>,
    /// Append an `err` column against the given reference solver.
    #[arg(long, value_enum)]
    reference: Option<Reference>,
    /// Output CSV; defaults to stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum CheckCommand {
    /// Multiplication table of the basic noise increments.
    ItoTable {
        #[arg(long, default_value_t = 3)]
        d: usize,
        /// Flip one table entry.
        #[arg(long)]
        fault: bool,
    },
    /// Discrete cocycle identity at the midpoint of the grid.
    Cocycle {
        #[arg(long)]
        params: PathBuf,
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 64)]
        steps: usize,
        /// Seed of the random coherent values.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Size of the random coherent values.
        #[arg(long, default_value_t = 0.5)]
        amplitude: f64,
        /// Read the shifted coherent values one slice late.
        #[arg(long)]
        fault: bool,
    },
    /// Classify `t -> Phi_t(I)` as martingale, submartingale or neither.
    Martingale {
        #[command(flatten)]
        source: Source,
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 32)]
        steps: usize,
    },
    /// Positivity of Gram matrices of coherent matrix elements.
    Gram {
        #[command(flatten)]
        source: Source,
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 128)]
        steps: usize,
        /// Number of random configurations.
        #[arg(long, default_value_t = 20)]
        configs: usize,
        /// Seed of the first configuration; later ones use consecutive seeds.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Blocks of the operator matrix.
        #[arg(long, default_value_t = 2)]
        blocks: usize,
        /// Coherent functions per configuration.
        #[arg(long, default_value_t = 2)]
        functions: usize,
        /// Rank of the random PSD operator matrix.
        #[arg(long, default_value_t = 1)]
        rank: usize,
        /// Size of the constant coherent values.
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        /// Smallest eigenvalue accepted as nonnegative.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

/// Input of a check: coefficients (toy Fock transfer) or a generator (ODE).
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Source {
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    generator: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Validate(a) => commands::validate(&a),
        Command::Dilate(a) => commands::dilate(&a),
        Command::Assemble(a) => commands::assemble(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Check(c) => commands::check(&c),
    };
    ExitCode::from(code)
}

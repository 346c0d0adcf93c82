//! `lqmf` command-line front end.
//!
//! Exit codes: 0 success, 2 failed standing-assumption check, 3 dichotomy
//! failure, 4 unreadable or malformed input, 1 anything else.

mod commands;
mod failure;
mod problem;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lqmf::QuadratureConfig;

use commands::{SimulateOptions, SolveOptions, System};
use failure::{Failure, EXIT_INPUT};

#[derive(Debug, Parser)]
#[command(name = "lqmf", version, about = "Discounted LQ mean-field solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Social optimum: Riccati, Hamiltonian dichotomy and initial costate.
    SolveSocial(SolveArgs),
    /// Mean-field game: Schur dichotomy of the game coefficient matrix.
    SolveGame(SolveArgs),
    /// Fixed-point contraction bound beta.
    Contraction(ContractionArgs),
    /// Monte Carlo simulation of the N-agent population.
    Simulate(SimulateArgs),
    /// Eigenvalues of H (social) or M_mfg (game).
    Spectrum(SpectrumArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Problem file (JSON).
    input: PathBuf,
    /// Imaginary-axis tolerance; defaults to 1e-9·(1 + ‖K‖_F).
    #[arg(long)]
    axis_tol: Option<f64>,
    /// End of the trajectory grid.
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
    /// Trajectory grid spacing.
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    /// Write the trajectory CSV here.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ContractionArgs {
    input: PathBuf,
    #[arg(long)]
    axis_tol: Option<f64>,
    /// Initial Simpson panel count.
    #[arg(long, default_value_t = 2048)]
    panels: usize,
    /// Bound on each truncated tail.
    #[arg(long, default_value_t = 1e-10)]
    truncation_tol: f64,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    input: PathBuf,
    /// Strategy to simulate.
    #[arg(long, value_enum, default_value_t = System::Social)]
    system: System,
    #[arg(long)]
    axis_tol: Option<f64>,
    #[arg(long, default_value_t = 32)]
    agents: usize,
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value_t = 16)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; all cores by default.
    #[arg(long)]
    threads: Option<usize>,
    /// Standard deviation of the i.i.d. initial states around x0.
    #[arg(long, default_value_t = 0.0)]
    init_std: f64,
    /// Write the empirical and reference mean field of replication 0 here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = System::Social)]
    system: System,
    #[arg(long)]
    axis_tol: Option<f64>,
}

fn solve_options(a: SolveArgs) -> SolveOptions {
    SolveOptions {
        input: a.input,
        axis_tol: a.axis_tol,
        t_end: a.t_end,
        dt: a.dt,
        trajectory: a.trajectory,
        report: a.report,
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::SolveSocial(a) => commands::solve_social(&solve_options(a)),
        Command::SolveGame(a) => commands::solve_game(&solve_options(a)),
        Command::Contraction(a) => {
            let cfg = QuadratureConfig {
                panels: a.panels,
                truncation_tol: a.truncation_tol,
                ..QuadratureConfig::default()
            };
            commands::contraction(&a.input, a.axis_tol, &cfg, a.report.as_deref())
        }
        Command::Simulate(a) => commands::simulate_population(&SimulateOptions {
            input: a.input,
            system: a.system,
            axis_tol: a.axis_tol,
            agents: a.agents,
            horizon: a.horizon,
            dt: a.dt,
            reps: a.reps,
            seed: a.seed,
            threads: a.threads,
            init_std: a.init_std,
            out: a.out,
            report: a.report,
        }),
        Command::Spectrum(a) => commands::spectrum_table(&a.input, a.system, a.axis_tol),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

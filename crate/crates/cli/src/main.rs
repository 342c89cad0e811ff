//! Command-line front end: build test problems, run and compare solvers,
//! export iteration histories, reconstructions and basis panels.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 usage error.

mod bundle;
mod commands;
mod config;

use clap::{Parser, Subcommand};
use flexgk::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "flexgk",
    about = "Flexible/inexact Golub-Kahan solvers for reweighted least squares",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a test problem bundle (data, truth, residual, metadata).
    MakeProblem(MakeProblemArgs),
    /// Run one or more solvers on a problem bundle.
    Solve(SolveArgs),
    /// Re-run a solver and export the leading solution/residual basis columns.
    ExportBasis(ExportBasisArgs),
    /// Run one solver with full inexactness diagnostics.
    Diagnose(DiagnoseArgs),
}

#[derive(clap::Args)]
pub struct MakeProblemArgs {
    /// Problem family.
    #[arg(long, value_parser = ["deblur", "tomo"])]
    pub problem: String,
    /// Output directory for the bundle.
    #[arg(long)]
    pub out: PathBuf,
    /// Image side for deblur problems.
    #[arg(long, default_value_t = 64)]
    pub side: usize,
    /// Gaussian PSF standard deviation (deblur).
    #[arg(long, default_value_t = 2.0)]
    pub psf_sigma: f64,
    /// Gaussian PSF half-width in pixels (deblur).
    #[arg(long, default_value_t = 6)]
    pub psf_halfwidth: usize,
    /// Grid side for tomography problems.
    #[arg(long, default_value_t = 32)]
    pub grid: usize,
    /// Number of projection angles (tomography).
    #[arg(long, default_value_t = 30)]
    pub angles: usize,
    /// Number of parallel rays per angle (tomography).
    #[arg(long, default_value_t = 45)]
    pub rays: usize,
    /// Fraction of measurements hit by salt-and-pepper corruption.
    #[arg(long, default_value_t = 0.1)]
    pub noise_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use a PGM image as the ground truth instead of the built-in phantom
    /// (deblur only; the image side must match --side).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Bit depth of emitted PGM images (8 or 16).
    #[arg(long, default_value_t = 16)]
    pub pgm_depth: u8,
}

#[derive(clap::Args, Clone)]
pub struct SolverOpts {
    /// lp data-fit exponent in (0, 2].
    #[arg(long)]
    pub p: Option<f64>,
    /// Smoothing parameter for the lp weights.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Total iteration budget across restart cycles.
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Restart criterion.
    #[arg(long, value_parser = ["none", "weights", "residual", "auto"])]
    pub restart: Option<String>,
    /// Tolerance of the residual restart criterion.
    #[arg(long)]
    pub restart_tol: Option<f64>,
    /// Maximum number of restart cycles.
    #[arg(long)]
    pub max_cycles: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Select the kept reconstruction by relative error instead of residual.
    #[arg(long)]
    pub select_by_error: bool,
    /// Plain Golub-Kahan iterations used to form the initial guess.
    #[arg(long)]
    pub warm_start: Option<usize>,
    /// Outer iterations for the irls baseline.
    #[arg(long)]
    pub irls_outer: Option<usize>,
    /// Inner LSQR iterations per irls outer cycle.
    #[arg(long)]
    pub irls_inner: Option<usize>,
    /// Compute the per-iteration inexactness bounds (expensive).
    #[arg(long)]
    pub diagnose: bool,
    /// Disable the second orthogonalization pass.
    #[arg(long)]
    pub no_reorth: bool,
    /// Entrywise reading of the weight-drift criterion.
    #[arg(long)]
    pub rest1_entrywise: bool,
    /// key=value config file; flags override it, it overrides defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct SolveArgs {
    /// Directory produced by make-problem.
    #[arg(long)]
    pub problem_dir: PathBuf,
    /// Comma-separated method list: lsqr,dap,dap_lsmr,apd,irls,exact.
    #[arg(long, default_value = "lsqr,dap,apd")]
    pub methods: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Bit depth of emitted PGM images (8 or 16).
    #[arg(long, default_value_t = 16)]
    pub pgm_depth: u8,
    #[command(flatten)]
    pub opts: SolverOpts,
}

#[derive(clap::Args)]
pub struct ExportBasisArgs {
    #[arg(long)]
    pub problem_dir: PathBuf,
    #[arg(long, default_value = "dap")]
    pub method: String,
    /// Number of leading basis columns to export.
    #[arg(long, default_value_t = 6)]
    pub count: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Bit depth of emitted PGM images (8 or 16).
    #[arg(long, default_value_t = 16)]
    pub pgm_depth: u8,
    #[command(flatten)]
    pub opts: SolverOpts,
}

#[derive(clap::Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub problem_dir: PathBuf,
    #[arg(long, default_value = "apd")]
    pub method: String,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub opts: SolverOpts,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::MakeProblem(args) => commands::make_problem(&args),
        Command::Solve(args) => commands::solve(&args),
        Command::ExportBasis(args) => commands::export_basis(&args),
        Command::Diagnose(args) => commands::diagnose(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Breakdown { .. }
                | Error::DegenerateProjection { .. }
                | Error::ZeroResidual => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

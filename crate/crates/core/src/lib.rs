//! Matrix-free iterative least squares with flexible and inexact
//! Golub-Kahan factorizations.
//!
//! The crate builds reweighted least-squares solvers for ℓp data fitting on
//! top of a flexible Golub-Kahan process that admits an iteration-dependent
//! diagonal preconditioner on the right of the adjoint. On that shared
//! factorization it implements the classical projected path (dap, and its
//! minimal-residual variant dap-lsmr), the rank-accumulated path (apd), a
//! fixed-weight LSQR reference, and an inner-outer IRLS baseline, together
//! with inexactness diagnostics and restart strategies.

pub mod diagnostics;
pub mod error;
pub mod fgk;
pub mod io;
pub mod operators;
pub mod problems;
pub mod restart;
pub mod solvers;
pub mod weights;

pub use error::{Error, Result};
pub use fgk::{fgk_init, FgkState, StepOutcome};
pub use operators::{adjoint_consistency_check, Boundary, Operator};
pub use problems::{make_deblur_problem, make_tomo_problem, Problem};
pub use restart::{RestartMode, RestartPolicy};
pub use solvers::{run_solver, Method, RunSettings, SolverRun};
pub use weights::{lp_weights, weights_at, WeightPolicy};

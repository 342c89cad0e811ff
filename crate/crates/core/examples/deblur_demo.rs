//! Minimal library walkthrough: build a corrupted deblurring problem, run
//! the drift-restarted flexible solver against plain LSQR, and print the
//! error histories.
//!
//! Run with `cargo run --release --example deblur_demo`.

use flexgk::problems::make_deblur_problem;
use flexgk::restart::{RestartMode, RestartPolicy};
use flexgk::solvers::{run_solver, Method, RunSettings};
use flexgk::weights::WeightPolicy;

fn main() -> flexgk::Result<()> {
    let problem = make_deblur_problem(48, 2.0, 5, 0.1, 42)?;
    println!(
        "problem: {} x {}, {} corrupted measurements",
        problem.op.rows(),
        problem.op.cols(),
        problem.noise.corrupted
    );

    for (method, mode) in [
        (Method::Lsqr, RestartMode::None),
        (Method::Apd, RestartMode::Weights),
    ] {
        let mut settings = RunSettings::new(method, WeightPolicy::lp(1.0, 1e-2)?);
        settings.k_max = 50;
        settings.restart = RestartPolicy::new(mode, 0.1, 10)?;
        let run = run_solver(&problem, &settings)?;
        println!(
            "{:8} best relative error {:.4} over {} iterations in {} cycle(s)",
            method.name(),
            run.best_relerr().unwrap(),
            run.records.len(),
            run.cycles
        );
    }
    Ok(())
}

//! Observe a tomography run from the inside: per-iteration inexactness
//! bounds and the descent certificate for the accumulated-weight method.
//!
//! Run with `cargo run --release --example tomo_diagnose`.

use flexgk::diagnostics::{
    estimate_opnorm, gradient_gap_bound, gradient_gap_bound_loose, monotonicity_margin,
    smoothed_lp_objective, OPNORM_INFLATION,
};
use flexgk::problems::make_tomo_problem;
use flexgk::restart::{RestartMode, RestartPolicy};
use flexgk::solvers::{run_solver_observed, Method, RunSettings};
use flexgk::weights::WeightPolicy;

fn main() -> flexgk::Result<()> {
    let (p, tau) = (1.0, 1e-2);
    let problem = make_tomo_problem(24, 20, 34, 0.1, 7)?;
    let op = problem.op.clone();
    let b = problem.b.clone();
    let norm_a = OPNORM_INFLATION * estimate_opnorm(&op, 10, 7)?;

    let mut settings = RunSettings::new(Method::Apd, WeightPolicy::lp(p, tau)?);
    settings.k_max = 20;
    settings.restart = RestartPolicy::new(RestartMode::Weights, 0.1, 6)?;

    println!("  k  cyc  relerr   grad gap ≤ bound ≤ loose       certificate");
    let mut f_prev = smoothed_lp_objective(&op, &b, &nalgebra::DVector::zeros(op.cols()), p, tau)?;
    run_solver_observed(&problem, &settings, |obs| {
        let grad = gradient_gap_bound(obs.state, &obs.solution.s, &op, 7).unwrap();
        let loose = gradient_gap_bound_loose(obs.state, &obs.solution.s, norm_a).unwrap();
        let (kval, err) = monotonicity_margin(obs.state, &op, &obs.solution.s, obs.s_prev).unwrap();
        let f = smoothed_lp_objective(&op, &b, obs.x, p, tau).unwrap();
        let cert = if kval > err {
            // the certificate promises a strict decrease of the smoothed
            // objective; show it held
            format!("K−err = {:+.2e}, f drop {:+.2e}", kval - err, f_prev - f)
        } else {
            "—".to_string()
        };
        println!(
            "{:3}  {:3}  {:.4}   {:9.3e} {:9.3e} {:9.3e}  {}",
            obs.record.k_global,
            obs.record.cycle,
            obs.record.relerr.unwrap(),
            grad.true_gap,
            grad.bound,
            loose,
            cert
        );
        f_prev = f;
    })?;
    Ok(())
}

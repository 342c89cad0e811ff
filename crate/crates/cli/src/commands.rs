//! Subcommand implementations.

use crate::bundle::{read_bundle, shape_from_meta, write_bundle};
use crate::config::{resolve, to_settings};
use crate::{DiagnoseArgs, ExportBasisArgs, MakeProblemArgs, SolveArgs};
use flexgk::diagnostics::{
    estimate_opnorm, functional_gap_bound, gradient_gap_bound, gradient_gap_bound_loose,
    monotonicity_margin, InexactnessReport, OPNORM_INFLATION,
};
use flexgk::error::{Error, Result};
use flexgk::io;
use flexgk::problems::{make_deblur_problem, make_deblur_problem_with_truth, make_tomo_problem};
use flexgk::solvers::{run_solver, run_solver_observed, Method};
use std::fmt::Write as _;

fn check_pgm_depth(depth: u8) -> Result<u8> {
    if depth == 8 || depth == 16 {
        Ok(depth)
    } else {
        Err(Error::InvalidParameter(format!(
            "--pgm-depth must be 8 or 16, got {depth}"
        )))
    }
}

pub fn make_problem(args: &MakeProblemArgs) -> Result<()> {
    let (problem, mut meta) = match args.problem.as_str() {
        "deblur" => {
            let problem = match &args.input {
                Some(path) => {
                    let (img, rows, cols) = io::read_pgm(path)?;
                    if rows != args.side || cols != args.side {
                        return Err(Error::InvalidParameter(format!(
                            "--input image is {rows}x{cols}, expected --side {0}x{0}",
                            args.side
                        )));
                    }
                    make_deblur_problem_with_truth(
                        args.side,
                        args.psf_sigma,
                        args.psf_halfwidth,
                        args.noise_fraction,
                        args.seed,
                        img,
                    )?
                }
                None => make_deblur_problem(
                    args.side,
                    args.psf_sigma,
                    args.psf_halfwidth,
                    args.noise_fraction,
                    args.seed,
                )?,
            };
            let meta = vec![
                ("problem".into(), "deblur".into()),
                ("side".into(), args.side.to_string()),
                ("psf_sigma".into(), args.psf_sigma.to_string()),
                ("psf_halfwidth".into(), args.psf_halfwidth.to_string()),
            ];
            (problem, meta)
        }
        "tomo" => {
            let problem = make_tomo_problem(
                args.grid,
                args.angles,
                args.rays,
                args.noise_fraction,
                args.seed,
            )?;
            let meta = vec![
                ("problem".into(), "tomo".into()),
                ("grid".into(), args.grid.to_string()),
                ("angles".into(), args.angles.to_string()),
                ("rays".into(), args.rays.to_string()),
            ];
            (problem, meta)
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "--problem must be deblur or tomo, got '{other}'"
            )))
        }
    };
    meta.push(("rows".into(), problem.op.rows().to_string()));
    meta.push(("cols".into(), problem.op.cols().to_string()));
    meta.push(("noise_fraction".into(), args.noise_fraction.to_string()));
    meta.push(("seed".into(), args.seed.to_string()));
    meta.push(("corrupted".into(), problem.noise.corrupted.to_string()));
    meta.push(("collisions".into(), problem.noise.collisions.to_string()));
    write_bundle(&args.out, &problem, &meta, check_pgm_depth(args.pgm_depth)?)?;
    println!(
        "wrote {} bundle to {} ({} x {}, {} corrupted entries)",
        args.problem,
        args.out.display(),
        problem.op.rows(),
        problem.op.cols(),
        problem.noise.corrupted
    );
    Ok(())
}

pub fn solve(args: &SolveArgs) -> Result<()> {
    let (problem, meta) = read_bundle(&args.problem_dir)?;
    let shape = shape_from_meta(&meta)?;
    let resolved = resolve(&args.opts)?;
    let methods: Vec<Method> = args
        .methods
        .split(',')
        .filter(|s| !s.is_empty())
        .map(Method::parse)
        .collect::<Result<_>>()?;
    if methods.is_empty() {
        return Err(Error::InvalidParameter(
            "--methods must name at least one method".into(),
        ));
    }
    let depth = check_pgm_depth(args.pgm_depth)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(args.out.display().to_string(), e))?;
    let mut comparison = String::from("method,iterations,cycles,best_relres,best_relerr\n");
    for method in methods {
        let settings = to_settings(&resolved, method)?;
        let run = run_solver(&problem, &settings)?;
        let dir = args.out.join(method.name());
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        io::write_run_csv(&dir.join("history.csv"), &run)?;
        io::write_vector_csv(&dir.join("x_best.csv"), &run.x_best)?;
        io::write_vector_csv(&dir.join("x_final.csv"), &run.x_final)?;
        io::write_pgm(
            &dir.join("x_best.pgm"),
            &run.x_best,
            shape.solution_rows,
            shape.solution_cols,
            depth,
        )?;
        // residual of the kept reconstruction, and its gap to the true
        // residual, both reshaped as data-space images
        let residual = problem.op.apply(&run.x_best)? - &problem.b;
        io::write_vector_csv(&dir.join("residual.csv"), &residual)?;
        io::write_pgm(
            &dir.join("residual_sqrt.pgm"),
            &residual.map(|v| v.abs().sqrt()),
            shape.data_rows,
            shape.data_cols,
            depth,
        )?;
        if let Some(r_true) = &problem.r_true {
            let residual_err = &residual - r_true;
            io::write_vector_csv(&dir.join("residual_err.csv"), &residual_err)?;
            io::write_pgm(
                &dir.join("residual_err_sqrt.pgm"),
                &residual_err.map(|v| v.abs().sqrt()),
                shape.data_rows,
                shape.data_cols,
                depth,
            )?;
        }
        if let Some(x_true) = &problem.x_true {
            let err_img = (&run.x_best - x_true).map(|v| v.abs().sqrt());
            io::write_pgm(
                &dir.join("err_sqrt.pgm"),
                &err_img,
                shape.solution_rows,
                shape.solution_cols,
                depth,
            )?;
        }
        let mut summary = String::new();
        let _ = write!(
            summary,
            "method={} iterations={} cycles={}",
            method.name(),
            run.records.len(),
            run.cycles
        );
        if let Some(best) = run.best_relres() {
            let _ = write!(summary, " best_relres={best}");
        }
        if let Some(best) = run.best_relerr() {
            let _ = write!(summary, " best_relerr={best}");
        }
        println!("{summary}");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let _ = writeln!(
            comparison,
            "{},{},{},{},{}",
            method.name(),
            run.records.len(),
            run.cycles,
            opt(run.best_relres()),
            opt(run.best_relerr())
        );
    }
    let summary_path = args.out.join("summary.csv");
    std::fs::write(&summary_path, comparison)
        .map_err(|e| Error::io(summary_path.display().to_string(), e))?;
    Ok(())
}

pub fn export_basis(args: &ExportBasisArgs) -> Result<()> {
    let (problem, meta) = read_bundle(&args.problem_dir)?;
    let shape = shape_from_meta(&meta)?;
    let resolved = resolve(&args.opts)?;
    let method = Method::parse(&args.method)?;
    if !matches!(method, Method::Dap | Method::DapLsmr | Method::Apd) {
        return Err(Error::InvalidParameter(
            "--method must be a flexible method (dap, dap_lsmr, apd) for basis export".into(),
        ));
    }
    let settings = to_settings(&resolved, method)?;
    let run = run_solver(&problem, &settings)?;
    let state = run
        .final_state
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("run produced no factorization state".into()))?;
    if args.count > state.num_v() {
        return Err(Error::InvalidParameter(format!(
            "--count {} exceeds the {} available basis columns",
            args.count,
            state.num_v()
        )));
    }
    let depth = check_pgm_depth(args.pgm_depth)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(args.out.display().to_string(), e))?;
    for i in 0..args.count {
        let v = state.v_col(i);
        io::write_vector_csv(&args.out.join(format!("v_{i:03}.csv")), v)?;
        io::write_pgm(
            &args.out.join(format!("v_{i:03}.pgm")),
            v,
            shape.solution_rows,
            shape.solution_cols,
            depth,
        )?;
        if i < state.num_u() {
            let y = state.y_col(i);
            io::write_vector_csv(&args.out.join(format!("y_{i:03}.csv")), y)?;
            io::write_pgm(
                &args.out.join(format!("y_{i:03}.pgm")),
                y,
                shape.data_rows,
                shape.data_cols,
                depth,
            )?;
        }
    }
    println!(
        "exported {} basis column(s) from the final {}-step cycle to {}",
        args.count,
        state.k(),
        args.out.display()
    );
    Ok(())
}

pub fn diagnose(args: &DiagnoseArgs) -> Result<()> {
    let (problem, _) = read_bundle(&args.problem_dir)?;
    let resolved = resolve(&args.opts)?;
    let method = Method::parse(&args.method)?;
    if !matches!(method, Method::Dap | Method::DapLsmr | Method::Apd) {
        return Err(Error::InvalidParameter(
            "--method must be a flexible method (dap, dap_lsmr, apd) for diagnostics".into(),
        ));
    }
    let mut settings = to_settings(&resolved, method)?;
    settings.diagnose = true;
    let norm_a = OPNORM_INFLATION * estimate_opnorm(&problem.op, 10, resolved.seed)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(args.out.display().to_string(), e))?;

    let op = problem.op.clone();
    let seed = resolved.seed;
    let mut reports: Vec<InexactnessReport> = Vec::new();
    let mut failures: Option<Error> = None;
    let run = run_solver_observed(&problem, &settings, |obs| {
        if failures.is_some() || obs.state.breakdown().is_some() {
            return;
        }
        let row = (|| -> Result<InexactnessReport> {
            let grad = gradient_gap_bound(obs.state, &obs.solution.s, &op, seed)?;
            let loose = gradient_gap_bound_loose(obs.state, &obs.solution.s, norm_a)?;
            let func = functional_gap_bound(obs.state, &obs.solution.s, &op)?;
            let (kval, err) = monotonicity_margin(obs.state, &op, &obs.solution.s, obs.s_prev)?;
            Ok(InexactnessReport {
                k: obs.record.k_global,
                grad_gap_true: grad.true_gap,
                grad_gap_bound: grad.bound,
                grad_gap_bound_loose: loose,
                func_gap_true: func.true_gap,
                func_gap_bound: func.bound,
                monotonicity_k: Some(kval),
                monotonicity_err: Some(err),
            })
        })();
        match row {
            Ok(row) => reports.push(row),
            Err(e) => failures = Some(e),
        }
    })?;
    if let Some(e) = failures {
        return Err(e);
    }
    let mut csv = String::from(
        "k_global,grad_gap_true,grad_gap_bound,grad_gap_bound_loose,func_gap_true,func_gap_bound,monotonicity_K,monotonicity_err\n",
    );
    for r in &reports {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.k,
            r.grad_gap_true,
            r.grad_gap_bound,
            r.grad_gap_bound_loose,
            r.func_gap_true,
            r.func_gap_bound,
            opt(r.monotonicity_k),
            opt(r.monotonicity_err)
        );
    }
    let path = args.out.join("diagnostics.csv");
    std::fs::write(&path, csv).map_err(|e| Error::io(path.display().to_string(), e))?;
    io::write_run_csv(&args.out.join("history.csv"), &run)?;
    println!(
        "diagnosed {} iteration(s) of {}; wrote {}",
        run.records.len(),
        method.name(),
        path.display()
    );
    Ok(())
}

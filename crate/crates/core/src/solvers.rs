//! Projected-problem solvers on top of the flexible factorization, the
//! fixed-weight reference path, the classical inner-outer IRLS baseline,
//! and the orchestration loop tying weights, restarts and diagnostics
//! together.
//!
//! All three flexible methods share one factorization and differ only in the
//! projected system solved at each dimension k:
//!
//! * dap:      T_{k,k+1} M_k s = β t₁₁ e₁
//! * dap-lsmr: min ‖T_{k+1} M_k s − β t₁₁ e₁‖₂
//! * apd:      (T_{k,k+1}M_k + (T_{k,k+1}M_k)ᵀ) s = β t₁₁ e₁ + M_kᵀ Y_{k+1}ᵀ r₀
//!
//! The equivalent reorderings of differentiate/approximate/project collapse
//! onto these two projected systems, so dap covers the whole classical
//! class and apd the whole new class.

use crate::diagnostics;
use crate::error::{Error, Result};
use crate::fgk::{fgk_init_with_reorth, FgkState, StepOutcome};
use crate::operators::Operator;
use crate::problems::Problem;
use crate::restart::{check_restart_residual, RestartMode, RestartPolicy, WeightDriftTracker};
use crate::weights::{weights_at, WeightPolicy};
use nalgebra::{DMatrix, DVector};

/// Condition-estimate ceiling for the dense projected solves.
pub const PROJECTION_COND_LIMIT: f64 = 1e14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Plain (identity-weight) LSQR on the ℓ2 problem.
    Lsqr,
    /// Classical inexact path (iCGLS); also covers dpa/pda.
    Dap,
    /// Minimal inexact-normal-equation-residual variant.
    DapLsmr,
    /// New flexible path from the rank-accumulated objective; covers adp/pad.
    Apd,
    /// Classical inner-outer IRLS with LSQR inner solves.
    Irls,
    /// Diagnostic-only: fixed weights evaluated at the exact solution.
    Exact,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Lsqr => "lsqr",
            Method::Dap => "dap",
            Method::DapLsmr => "dap_lsmr",
            Method::Apd => "apd",
            Method::Irls => "irls",
            Method::Exact => "exact",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "lsqr" => Ok(Method::Lsqr),
            "dap" => Ok(Method::Dap),
            "dap_lsmr" | "dap-lsmr" => Ok(Method::DapLsmr),
            "apd" => Ok(Method::Apd),
            "irls" => Ok(Method::Irls),
            "exact" => Ok(Method::Exact),
            other => Err(Error::InvalidParameter(format!("unknown method '{other}'"))),
        }
    }
}

/// Coefficients of the k-dimensional projected solution.
#[derive(Debug, Clone)]
pub struct ProjectedSolution {
    pub s: DVector<f64>,
    pub method: Method,
    pub k: usize,
}

/// One recorded iteration of a solver run.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub cycle: usize,
    pub k_global: usize,
    pub k_local: usize,
    pub relres: f64,
    pub relerr: Option<f64>,
    pub objective_lp: f64,
    pub bound_grad: Option<f64>,
    pub bound_func: Option<f64>,
    pub restarted: bool,
}

/// Frozen copy of the settings a run was produced with.
#[derive(Debug, Clone)]
pub struct RunConfigSnapshot {
    pub method: Method,
    pub k_max: usize,
    pub restart_mode: RestartMode,
    pub restart_tol: f64,
    pub max_cycles: usize,
    pub seed: u64,
    pub p: Option<f64>,
    pub tau: Option<f64>,
    pub warm_start: usize,
}

#[derive(Debug, Clone)]
pub struct SolverRun {
    pub records: Vec<IterationRecord>,
    pub x_best: DVector<f64>,
    pub x_final: DVector<f64>,
    /// Global iteration indices at which a new cycle started.
    pub restarts: Vec<usize>,
    pub cycles: usize,
    pub config: RunConfigSnapshot,
    /// Final cycle's factorization, kept for basis export (flexible methods).
    pub final_state: Option<FgkState>,
}

impl SolverRun {
    pub fn best_relerr(&self) -> Option<f64> {
        self.records
            .iter()
            .filter_map(|r| r.relerr)
            .fold(None, |acc, v| {
                Some(match acc {
                    None => v,
                    Some(a) => a.min(v),
                })
            })
    }

    pub fn best_relres(&self) -> Option<f64> {
        self.records
            .iter()
            .map(|r| r.relres)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.min(v))))
    }
}

/// Everything `run_solver` needs besides the problem itself.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub method: Method,
    pub policy: WeightPolicy,
    pub k_max: usize,
    pub restart: RestartPolicy,
    pub seed: u64,
    /// Select x_best by relative error instead of relative residual
    /// (only possible when the problem carries a ground truth).
    pub select_by_error: bool,
    /// Plain Golub-Kahan iterations used to form the initial guess.
    pub warm_start: usize,
    pub irls_outer: usize,
    pub irls_inner: usize,
    /// Fill the bound columns of each record (expensive).
    pub diagnose: bool,
    pub reorth: bool,
}

impl RunSettings {
    pub fn new(method: Method, policy: WeightPolicy) -> Self {
        RunSettings {
            method,
            policy,
            k_max: 60,
            restart: RestartPolicy::default(),
            seed: 0,
            select_by_error: false,
            warm_start: 0,
            irls_outer: 20,
            irls_inner: 10,
            diagnose: false,
            reorth: true,
        }
    }
}

/// Solves T_{k,k+1} M_k s = β t₁₁ e₁ by dense factorization of the k×k system.
pub fn solve_projected_dap(state: &FgkState) -> Result<ProjectedSolution> {
    let k = require_k(state)?;
    let a = state.projected_matrix();
    let rhs = scaled_e1(k, state.beta() * state.t11());
    let s = solve_dense(&a, &rhs, k)?;
    Ok(ProjectedSolution {
        s,
        method: Method::Dap,
        k,
    })
}

/// Solves min_s ‖T_{k+1} M_k s − β t₁₁ e₁‖₂ via orthogonal factorization.
pub fn solve_projected_dap_lsmr(state: &FgkState) -> Result<ProjectedSolution> {
    let k = require_k(state)?;
    let a = state.full_projected_matrix();
    let rhs = scaled_e1(k + 1, state.beta() * state.t11());
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 0.0 || smax / smin > PROJECTION_COND_LIMIT {
        return Err(Error::DegenerateProjection {
            k,
            reason: format!(
                "rank-deficient least-squares matrix (cond ~ {:.2e})",
                smax / smin
            ),
        });
    }
    let s = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::DegenerateProjection {
            k,
            reason: e.into(),
        })?;
    Ok(ProjectedSolution {
        s,
        method: Method::DapLsmr,
        k,
    })
}

/// Solves (T_{k,k+1}M_k + (T_{k,k+1}M_k)ᵀ) s = β t₁₁ e₁ + M_kᵀ Y_{k+1}ᵀ r₀.
pub fn solve_projected_apd(state: &FgkState) -> Result<ProjectedSolution> {
    let k = require_k(state)?;
    let tm = state.projected_matrix();
    let sym = &tm + tm.transpose();
    let rhs =
        scaled_e1(k, state.beta() * state.t11()) + state.m_matrix().transpose() * state.y_t_r0();
    let s = solve_dense(&sym, &rhs, k)?;
    Ok(ProjectedSolution {
        s,
        method: Method::Apd,
        k,
    })
}

fn require_k(state: &FgkState) -> Result<usize> {
    let k = state.k();
    if k == 0 {
        return Err(Error::InvalidParameter(
            "projected solve needs at least one factorization step".into(),
        ));
    }
    Ok(k)
}

fn scaled_e1(len: usize, scale: f64) -> DVector<f64> {
    let mut e = DVector::zeros(len);
    e[0] = scale;
    e
}

/// Dense solve with a singular-value condition estimate.
fn solve_dense(a: &DMatrix<f64>, rhs: &DVector<f64>, k: usize) -> Result<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 0.0 || smax / smin > PROJECTION_COND_LIMIT {
        return Err(Error::DegenerateProjection {
            k,
            reason: format!("condition estimate {:.2e} exceeds limit", smax / smin),
        });
    }
    svd.solve(rhs, 0.0)
        .map_err(|e| Error::DegenerateProjection {
            k,
            reason: e.into(),
        })
}

/// 1/p · Σ |r_j|^p of the data residual.
fn lp_objective(op: &Operator, b: &DVector<f64>, x: &DVector<f64>, p: f64) -> f64 {
    let r = op.apply(x).expect("dimensions checked upstream") - b;
    r.iter().map(|v| v.abs().powf(p)).sum::<f64>() / p
}

fn policy_exponent(policy: &WeightPolicy) -> f64 {
    match policy {
        WeightPolicy::Lp { p, .. } => *p,
        WeightPolicy::Fixed { .. } => 2.0,
    }
}

/// Fixed-weight reference path: classical split-preconditioned Golub-Kahan
/// bidiagonalization of (R^{-1/2}A, R^{-1/2}r₀), solving
/// B_{k+1,k}ᵀ B_{k+1,k} s = α₁ β e₁ at every dimension. With unit weights
/// this is plain LSQR.
pub fn reference_lsqr_fixed(
    op: &Operator,
    b: &DVector<f64>,
    x0: &DVector<f64>,
    fixed_diag: &DVector<f64>,
    k_max: usize,
    x_true: Option<&DVector<f64>>,
) -> Result<SolverRun> {
    reference_lsqr_engine(op, b, x0, fixed_diag, k_max, x_true, |_, _| {})
}

fn reference_lsqr_engine(
    op: &Operator,
    b: &DVector<f64>,
    x0: &DVector<f64>,
    fixed_diag: &DVector<f64>,
    k_max: usize,
    x_true: Option<&DVector<f64>>,
    mut on_iterate: impl FnMut(usize, &DVector<f64>),
) -> Result<SolverRun> {
    if fixed_diag.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::InvalidParameter(
            "fixed weight diagonal must be strictly positive".into(),
        ));
    }
    let sqrt_d = fixed_diag.map(f64::sqrt);
    let r0 = b - op.apply(x0)?;
    let b_norm = b.norm();
    let mut records = Vec::new();
    let config = RunConfigSnapshot {
        method: Method::Lsqr,
        k_max,
        restart_mode: RestartMode::None,
        restart_tol: 0.1,
        max_cycles: 1,
        seed: 0,
        p: None,
        tau: None,
        warm_start: 0,
    };

    let beta1_vec = sqrt_d.component_mul(&r0);
    let beta1 = beta1_vec.norm();
    if beta1 == 0.0 {
        return Ok(SolverRun {
            records,
            x_best: x0.clone(),
            x_final: x0.clone(),
            restarts: Vec::new(),
            cycles: 1,
            config,
            final_state: None,
        });
    }
    let mut u_cols = vec![&beta1_vec / beta1];
    // alpha1 v1 = (R^{-1/2}A)^T u1
    let mut w = op.apply_adjoint(&sqrt_d.component_mul(&u_cols[0]))?;
    let alpha1 = w.norm();
    if alpha1 == 0.0 {
        return Err(Error::Breakdown {
            stage: "adjoint",
            step: 0,
        });
    }
    let mut v_cols = vec![w.clone() / alpha1];
    let mut alphas = vec![alpha1];
    let mut betas = vec![beta1];
    let scale_est = alpha1.max(beta1);

    let mut x_final = x0.clone();
    let mut best: Option<(f64, usize, DVector<f64>)> = None;

    for k in 1..=k_max {
        // beta_{k+1} u_{k+1} = (R^{1/2}... ) A v_k - alpha_k u_k, reorthogonalized
        let mut u = sqrt_d.component_mul(&op.apply(&v_cols[k - 1])?);
        for _ in 0..2 {
            for uj in &u_cols {
                let c = u.dot(uj);
                u.axpy(-c, uj, 1.0);
            }
        }
        let beta_next = u.norm();
        let u_ok = beta_next > 1e-14 * scale_est;
        if u_ok {
            u_cols.push(u / beta_next);
            betas.push(beta_next);
        }

        // solve min ||B_{k+1,k} s - beta1 e1|| on the available bidiagonal
        let rows = if u_ok { k + 1 } else { k };
        let mut bmat = DMatrix::zeros(rows, k);
        for i in 0..k {
            bmat[(i, i)] = alphas[i];
            if i + 1 < rows && i + 1 < betas.len() {
                bmat[(i + 1, i)] = betas[i + 1];
            }
        }
        let rhs = scaled_e1(rows, beta1);
        let s = bmat
            .svd(true, true)
            .solve(&rhs, 0.0)
            .map_err(|e| Error::DegenerateProjection {
                k,
                reason: e.into(),
            })?;
        let mut x = x0.clone();
        for (i, vi) in v_cols.iter().enumerate() {
            x.axpy(s[i], vi, 1.0);
        }
        let relres = relative_residual(op, b, &x, b_norm)?;
        let relerr = match x_true {
            Some(t) => Some(crate::problems::relative_error(&x, t)?),
            None => None,
        };
        records.push(IterationRecord {
            cycle: 1,
            k_global: k,
            k_local: k,
            relres,
            relerr,
            objective_lp: {
                let r = op.apply(&x)? - b;
                0.5 * r.norm_squared()
            },
            bound_grad: None,
            bound_func: None,
            restarted: false,
        });
        update_best(&mut best, relres, relerr, false, k, &x);
        on_iterate(k, &x);
        x_final = x;
        if !u_ok {
            break;
        }

        // alpha_{k+1} v_{k+1} = (R^{-1/2}A)^T u_{k+1} - beta_{k+1} v_k
        w = op.apply_adjoint(&sqrt_d.component_mul(&u_cols[k]))?;
        for _ in 0..2 {
            for vj in &v_cols {
                let c = w.dot(vj);
                w.axpy(-c, vj, 1.0);
            }
        }
        let alpha_next = w.norm();
        if alpha_next <= 1e-14 * scale_est {
            break;
        }
        v_cols.push(&w / alpha_next);
        alphas.push(alpha_next);
    }

    let x_best = best.map(|(_, _, x)| x).unwrap_or_else(|| x_final.clone());
    Ok(SolverRun {
        records,
        x_best,
        x_final,
        restarts: Vec::new(),
        cycles: 1,
        config,
        final_state: None,
    })
}

/// Classical inner-outer IRLS: each outer cycle fixes the weights at the
/// previous solution and warm-starts an LSQR solve with them.
pub fn irls_outer(
    op: &Operator,
    b: &DVector<f64>,
    p: f64,
    tau: f64,
    n_outer: usize,
    n_inner: usize,
    x_true: Option<&DVector<f64>>,
) -> Result<SolverRun> {
    if n_outer == 0 || n_inner == 0 {
        return Err(Error::InvalidParameter(
            "irls needs at least one outer and one inner iteration".into(),
        ));
    }
    let policy = WeightPolicy::lp(p, tau)?;
    let mut x = DVector::zeros(op.cols());
    let mut records = Vec::new();
    let mut restarts = Vec::new();
    let mut best: Option<(f64, usize, DVector<f64>)> = None;
    let mut k_global = 0;
    for outer in 1..=n_outer {
        let w = weights_at(&policy, &x, op, b)?;
        let mut objectives = Vec::with_capacity(n_inner);
        let mut iterates: Vec<DVector<f64>> = Vec::with_capacity(n_inner);
        let inner = reference_lsqr_engine(op, b, &x, &w, n_inner, x_true, |_, xk| {
            objectives.push(lp_objective(op, b, xk, p));
            iterates.push(xk.clone());
        })?;
        if inner.records.is_empty() {
            break; // exact solve reached
        }
        if outer > 1 {
            restarts.push(k_global);
        }
        for (i, rec) in inner.records.iter().enumerate() {
            k_global += 1;
            records.push(IterationRecord {
                cycle: outer,
                k_global,
                k_local: rec.k_local,
                relres: rec.relres,
                relerr: rec.relerr,
                objective_lp: objectives[i],
                bound_grad: None,
                bound_func: None,
                restarted: false,
            });
            update_best(
                &mut best,
                rec.relres,
                rec.relerr,
                false,
                k_global,
                &iterates[i],
            );
        }
        x = inner.x_final.clone();
        if let Some(last) = records.last_mut() {
            if outer < n_outer {
                last.restarted = true;
            }
        }
    }
    let x_best = best.map(|(_, _, x)| x).unwrap_or_else(|| x.clone());
    Ok(SolverRun {
        records,
        x_best,
        x_final: x,
        restarts,
        cycles: n_outer,
        config: RunConfigSnapshot {
            method: Method::Irls,
            k_max: n_outer * n_inner,
            restart_mode: RestartMode::None,
            restart_tol: 0.1,
            max_cycles: n_outer,
            seed: 0,
            p: Some(p),
            tau: Some(tau),
            warm_start: 0,
        },
        final_state: None,
    })
}

fn relative_residual(
    op: &Operator,
    b: &DVector<f64>,
    x: &DVector<f64>,
    b_norm: f64,
) -> Result<f64> {
    let r = op.apply(x)? - b;
    Ok(if b_norm > 0.0 {
        r.norm() / b_norm
    } else {
        r.norm()
    })
}

fn update_best(
    best: &mut Option<(f64, usize, DVector<f64>)>,
    relres: f64,
    relerr: Option<f64>,
    select_by_error: bool,
    k: usize,
    x: &DVector<f64>,
) {
    let metric = if select_by_error {
        relerr.unwrap_or(relres)
    } else {
        relres
    };
    let replace = match best {
        None => true,
        Some((m, _, _)) => metric < *m, // ties keep the smaller k
    };
    if replace {
        *best = Some((metric, k, x.clone()));
    }
}

/// Snapshot handed to a [`run_solver_observed`] observer after each
/// recorded iteration of a flexible-method run.
pub struct ObservedIteration<'a> {
    pub state: &'a FgkState,
    pub solution: &'a ProjectedSolution,
    /// Previous iterate's coefficients in the same cycle (empty at the
    /// first iteration of a cycle).
    pub s_prev: &'a DVector<f64>,
    pub x: &'a DVector<f64>,
    pub record: &'a IterationRecord,
}

/// Runs one solver on a problem: drives the factorization, solves the
/// method's projected system each step, evaluates metrics, updates weights
/// from the new iterate (weights for step i+1 come from the residual of the
/// iterate available after v_{i+1}), and consults the restart policy.
pub fn run_solver(problem: &Problem, settings: &RunSettings) -> Result<SolverRun> {
    run_solver_observed(problem, settings, |_| {})
}

/// [`run_solver`] with a per-iteration observer; the observer sees the
/// live factorization state and never influences the trajectory.
pub fn run_solver_observed(
    problem: &Problem,
    settings: &RunSettings,
    mut observer: impl FnMut(ObservedIteration<'_>),
) -> Result<SolverRun> {
    let op = &problem.op;
    let b = &problem.b;
    let truth = problem.x_true.as_ref();

    match settings.method {
        Method::Lsqr => {
            let identity = DVector::from_element(op.rows(), 1.0);
            let x0 = initial_guess(op, b, settings)?;
            return reference_lsqr_fixed(op, b, &x0, &identity, settings.k_max, truth);
        }
        Method::Exact => {
            let t = truth.ok_or_else(|| {
                Error::InvalidParameter("exact baseline needs a ground truth".into())
            })?;
            let w = weights_at(&settings.policy, t, op, b)?;
            let x0 = initial_guess(op, b, settings)?;
            return reference_lsqr_fixed(op, b, &x0, &w, settings.k_max, truth);
        }
        Method::Irls => {
            let (p, tau) = match settings.policy {
                WeightPolicy::Lp { p, tau } => (p, tau),
                WeightPolicy::Fixed { .. } => (2.0, 1e-2),
            };
            return irls_outer(
                op,
                b,
                p,
                tau,
                settings.irls_outer,
                settings.irls_inner,
                truth,
            );
        }
        Method::Dap | Method::DapLsmr | Method::Apd => {}
    }

    let restart_mode = effective_restart_mode(settings.method, settings.restart.mode);
    let b_norm = b.norm();
    let p_exp = policy_exponent(&settings.policy);

    let mut x0 = initial_guess(op, b, settings)?;
    let mut current_w = weights_at(&settings.policy, &x0, op, b)?;
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut restarts = Vec::new();
    let mut best: Option<(f64, usize, DVector<f64>)> = None;
    let mut cycle = 1usize;
    let mut k_global = 0usize;
    let mut x_final = x0.clone();
    let mut last_state: Option<FgkState> = None;

    'cycles: loop {
        let r0 = b - op.apply(&x0)?;
        if r0.norm() == 0.0 {
            break; // solution attained
        }
        let mut state = fgk_init_with_reorth(op, &r0, &current_w, settings.reorth)?;
        // R₂⁻¹ also comes from x₀: the first iterate only exists after v₂.
        let mut next_w = current_w.clone();
        let mut tracker = WeightDriftTracker::new(settings.restart.entrywise_drift);
        let mut k_local = 0usize;
        let mut s_prev = DVector::zeros(0);

        while k_global < settings.k_max {
            let outcome = state.step(op, &next_w)?;
            let broke = matches!(outcome, StepOutcome::Breakdown(_));
            let proj = match settings.method {
                Method::Dap => solve_projected_dap(&state),
                Method::DapLsmr => solve_projected_dap_lsmr(&state),
                Method::Apd => solve_projected_apd(&state),
                _ => unreachable!(),
            };
            let proj = match proj {
                Ok(p) => p,
                Err(Error::DegenerateProjection { .. })
                    if cycle < settings.restart.max_cycles && k_local > 0 =>
                {
                    // salvage by restarting from the last accepted iterate
                    restarts.push(k_global);
                    if let Some(last) = records.last_mut() {
                        last.restarted = true;
                    }
                    cycle += 1;
                    x0 = x_final.clone();
                    current_w = weights_at(&settings.policy, &x0, op, b)?;
                    continue 'cycles;
                }
                Err(e) => return Err(e),
            };
            let mut x = x0.clone();
            for i in 0..proj.k.min(state.num_v()) {
                x.axpy(proj.s[i], state.v_col(i), 1.0);
            }
            k_global += 1;
            k_local += 1;
            let relres = relative_residual(op, b, &x, b_norm)?;
            let relerr = match truth {
                Some(t) => Some(crate::problems::relative_error(&x, t)?),
                None => None,
            };
            let (bound_grad, bound_func) = if settings.diagnose && state.breakdown().is_none() {
                let g = diagnostics::gradient_gap_bound(&state, &proj.s, op, settings.seed)?;
                let f = diagnostics::functional_gap_bound(&state, &proj.s, op)?;
                (Some(g.bound), Some(f.bound))
            } else {
                (None, None)
            };
            update_best(
                &mut best,
                relres,
                relerr,
                settings.select_by_error && truth.is_some(),
                k_global,
                &x,
            );

            // R_{k+2}⁻¹ from the iterate that just became available.
            next_w = weights_at(&settings.policy, &x, op, b)?;

            let mut do_restart = match restart_mode {
                RestartMode::None => false,
                RestartMode::Weights => tracker.check(state.weight_diags(), &next_w),
                RestartMode::Residual => {
                    check_restart_residual(op, b, &x, &x0, settings.restart.tol)?
                }
                RestartMode::Auto => unreachable!("resolved above"),
            };
            if broke {
                do_restart = restart_mode != RestartMode::None;
            }
            let will_restart = do_restart && cycle < settings.restart.max_cycles;
            records.push(IterationRecord {
                cycle,
                k_global,
                k_local,
                relres,
                relerr,
                objective_lp: lp_objective(op, b, &x, p_exp),
                bound_grad,
                bound_func,
                restarted: will_restart,
            });
            observer(ObservedIteration {
                state: &state,
                solution: &proj,
                s_prev: &s_prev,
                x: &x,
                record: records.last().expect("just pushed"),
            });
            s_prev = proj.s.clone();
            x_final = x.clone();
            if will_restart {
                restarts.push(k_global);
                cycle += 1;
                x0 = x;
                current_w = next_w.clone();
                last_state = Some(state);
                continue 'cycles;
            }
            if broke {
                break 'cycles; // cannot continue this factorization
            }
        }
        last_state = Some(state);
        break;
    }

    let x_best = best.map(|(_, _, x)| x).unwrap_or_else(|| x_final.clone());
    let (p_opt, tau_opt) = match settings.policy {
        WeightPolicy::Lp { p, tau } => (Some(p), Some(tau)),
        WeightPolicy::Fixed { .. } => (None, None),
    };
    Ok(SolverRun {
        records,
        x_best,
        x_final,
        restarts,
        cycles: cycle,
        config: RunConfigSnapshot {
            method: settings.method,
            k_max: settings.k_max,
            restart_mode,
            restart_tol: settings.restart.tol,
            max_cycles: settings.restart.max_cycles,
            seed: settings.seed,
            p: p_opt,
            tau: tau_opt,
            warm_start: settings.warm_start,
        },
        final_state: last_state,
    })
}

/// The per-method default pairing: drift criterion for the classical
/// methods, residual criterion for the new one.
pub fn effective_restart_mode(method: Method, mode: RestartMode) -> RestartMode {
    match mode {
        RestartMode::Auto => match method {
            Method::Dap | Method::DapLsmr => RestartMode::Weights,
            Method::Apd => RestartMode::Residual,
            _ => RestartMode::None,
        },
        other => other,
    }
}

fn initial_guess(op: &Operator, b: &DVector<f64>, settings: &RunSettings) -> Result<DVector<f64>> {
    let zero = DVector::zeros(op.cols());
    if settings.warm_start == 0 {
        return Ok(zero);
    }
    let identity = DVector::from_element(op.rows(), 1.0);
    let warm = reference_lsqr_fixed(op, b, &zero, &identity, settings.warm_start, None)?;
    Ok(warm.x_final)
}

//! Inexactness estimates and monotonicity certificates.
//!
//! All computations here are pure observers over factorization snapshots;
//! they never alter a solver trajectory.

use crate::error::{Error, Result};
use crate::fgk::FgkState;
use crate::operators::{standard_normal_vector, Operator};
use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Factor applied to the Golub-Kahan operator-norm estimate before it is
/// used inside a bound (the raw estimate approaches ‖A‖ from below).
pub const OPNORM_INFLATION: f64 = 1.1;

const POWER_ITERATIONS: usize = 20;

/// Per-iteration inexactness summary.
#[derive(Debug, Clone)]
pub struct InexactnessReport {
    pub k: usize,
    pub grad_gap_true: f64,
    pub grad_gap_bound: f64,
    pub grad_gap_bound_loose: f64,
    pub func_gap_true: f64,
    pub func_gap_bound: f64,
    pub monotonicity_k: Option<f64>,
    pub monotonicity_err: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct GapEstimate {
    pub true_gap: f64,
    pub bound: f64,
}

/// Largest singular value of the bidiagonal matrix produced by `iters`
/// plain Golub-Kahan steps from a seeded random start. A lower estimate of
/// ‖A‖₂; multiply by [`OPNORM_INFLATION`] before using it in a bound.
pub fn estimate_opnorm(op: &Operator, iters: usize, seed: u64) -> Result<f64> {
    if iters < 2 {
        return Err(Error::InvalidParameter(
            "operator norm estimation needs at least 2 iterations".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = standard_normal_vector(op.rows(), &mut rng);
    let beta1 = start.norm();
    let mut u_cols = vec![&start / beta1];
    let mut w = op.apply_adjoint(&u_cols[0])?;
    let alpha1 = w.norm();
    if alpha1 == 0.0 {
        return Ok(0.0);
    }
    let mut v_cols = vec![&w / alpha1];
    let mut alphas = vec![alpha1];
    let mut betas: Vec<f64> = Vec::new();
    for k in 1..iters {
        let mut u = op.apply(&v_cols[k - 1])?;
        for _ in 0..2 {
            for uj in &u_cols {
                let c = u.dot(uj);
                u.axpy(-c, uj, 1.0);
            }
        }
        let beta = u.norm();
        if beta <= 1e-14 * alpha1 {
            break;
        }
        u_cols.push(u / beta);
        betas.push(beta);
        w = op.apply_adjoint(&u_cols[k])?;
        for _ in 0..2 {
            for vj in &v_cols {
                let c = w.dot(vj);
                w.axpy(-c, vj, 1.0);
            }
        }
        let alpha = w.norm();
        if alpha <= 1e-14 * alpha1 {
            break;
        }
        v_cols.push(&w / alpha);
        alphas.push(alpha);
    }
    let k = alphas.len();
    let rows = if betas.len() >= k { k + 1 } else { k };
    let mut b = DMatrix::zeros(rows, k);
    for i in 0..k {
        b[(i, i)] = alphas[i];
        if i + 1 < rows {
            b[(i + 1, i)] = betas[i];
        }
    }
    Ok(b.svd(false, false).singular_values.max())
}

/// σ estimate for AᵀE_i: power iteration on (AᵀE_i)ᵀ(AᵀE_i) from a seeded
/// random start, floored by the Rayleigh value at u_i so the bound always
/// dominates the term it replaces.
fn atei_norm_estimate(
    state: &FgkState,
    op: &Operator,
    i: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let ei_abs_max = {
        let probe = DVector::from_element(op.rows(), 1.0);
        state.error_apply(i, &probe)?.abs().max()
    };
    if ei_abs_max == 0.0 {
        return Ok(0.0);
    }
    let b_apply =
        |w: &DVector<f64>| -> Result<DVector<f64>> { op.apply_adjoint(&state.error_apply(i, w)?) };
    let bt_apply =
        |z: &DVector<f64>| -> Result<DVector<f64>> { state.error_apply(i, &op.apply(z)?) };
    // floor: ||A^T E_i u_i||
    let floor = b_apply(state.u_col(i - 1))?.norm();
    let mut w = standard_normal_vector(op.rows(), rng);
    let mut estimate: f64 = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let nw = w.norm();
        if nw == 0.0 {
            break;
        }
        w /= nw;
        let z = b_apply(&w)?;
        estimate = estimate.max(z.norm());
        w = bt_apply(&z)?;
    }
    Ok(estimate.max(floor))
}

/// True gradient gap ‖∇g^{(k)} − ∇ĝ^{(k)}‖ at x_k = V_k s, and the
/// per-source bound ‖AᵀE₁r₀‖ + Σᵢ ‖AᵀE_i‖·|[M_k s]_i|.
pub fn gradient_gap_bound(
    state: &FgkState,
    s: &DVector<f64>,
    op: &Operator,
    seed: u64,
) -> Result<GapEstimate> {
    let k = state.k();
    if s.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: s.len(),
        });
    }
    let x = basis_combination(state, s);
    let t = op.apply(&x)? - state.r0();
    // gap vector = -E^T R^{-1} t + ... collapses to the expansion below:
    // grad g - grad ghat = -(E^(k))^T R_{k+1}^{-1} (A x_k - r0)
    let gap_vec = state.inexactness_adjoint_apply(op, &t)?;
    let true_gap = gap_vec.norm();

    let s_bar = state.m_matrix() * s;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first_term = op
        .apply_adjoint(&state.error_apply(1, &state.r0())?)?
        .norm();
    let mut bound = first_term;
    // a step cut short by breakdown stores fewer sources than k+1
    let sources = (k + 1).min(state.weight_diags().len());
    for i in 1..=sources {
        let coeff = s_bar[i - 1].abs();
        if coeff == 0.0 {
            continue;
        }
        bound += atei_norm_estimate(state, op, i, &mut rng)? * coeff;
    }
    Ok(GapEstimate { true_gap, bound })
}

/// Cheaper, looser variant: ‖A‖·‖E₁r₀‖ + Σᵢ ‖A‖·‖E_i‖·|[M_k s]_i| with
/// ‖E_i‖ the max absolute diagonal difference (exact for diagonal weights).
pub fn gradient_gap_bound_loose(state: &FgkState, s: &DVector<f64>, norm_a: f64) -> Result<f64> {
    let k = state.k();
    if s.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: s.len(),
        });
    }
    let e1_r0 = state.error_apply(1, &state.r0())?.norm();
    let s_bar = state.m_matrix() * s;
    let m = state.r0().len();
    let probe = DVector::from_element(m, 1.0);
    let mut total = norm_a * e1_r0;
    for i in 1..=(k + 1).min(state.weight_diags().len()) {
        let ei_norm = state.error_apply(i, &probe)?.abs().max();
        total += norm_a * ei_norm * s_bar[i - 1].abs();
    }
    Ok(total)
}

/// Gap between the rank-accumulated and exact projected functionals at s,
/// |ḡ_k(s) − g_k(s)|, plus the bound ½‖r_k‖ Σᵢ ‖E_i‖·|[M_k s − βe₁]_i|.
pub fn functional_gap_bound(
    state: &FgkState,
    s: &DVector<f64>,
    op: &Operator,
) -> Result<GapEstimate> {
    let k = state.k();
    if s.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: s.len(),
        });
    }
    let x = basis_combination(state, s);
    let t = op.apply(&x)? - state.r0();
    let d_last = &state.weight_diags()[state.weight_diags().len() - 1];
    let g_exact = 0.5 * t.dot(&d_last.component_mul(&t));
    let g_bar = 0.5 * t.dot(&state.rbar_apply(&t));
    let true_gap = (g_bar - g_exact).abs();

    let proj_res = state.m_matrix() * s - {
        let mut e = DVector::zeros(k + 1);
        e[0] = state.beta();
        e
    };
    let rk_norm = t.norm();
    let probe = DVector::from_element(t.len(), 1.0);
    let mut bound = 0.0;
    for i in 1..=(k + 1).min(state.weight_diags().len()) {
        let ei_norm = state.error_apply(i, &probe)?.abs().max();
        bound += ei_norm * proj_res[i - 1].abs();
    }
    bound *= 0.5 * rk_norm;
    Ok(GapEstimate { true_gap, bound })
}

/// Monotonicity certificate for the majorization interpretation: returns
/// K = ḡ^{(k)}(x_{k−1}) − ḡ^{(k)}(x_k) and the exact inexactness correction
/// err = ½(q(r_{k−1}) − q(r_k)) with q(r) = Σᵢ (rᵀE_iuᵢ)(uᵢᵀr). Whenever the
/// weights satisfy R_{k+1}⁻¹ = R⁻¹(x_{k−1}), K > err certifies a strict
/// decrease of the smoothed ℓp objective, since the exact-functional drop
/// equals K − err on the residual subspace.
pub fn monotonicity_margin(
    state: &FgkState,
    op: &Operator,
    s_k: &DVector<f64>,
    s_km1: &DVector<f64>,
) -> Result<(f64, f64)> {
    let k = state.k();
    if s_k.len() != k || s_km1.len() + 1 != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: s_k.len().min(s_km1.len() + 1),
        });
    }
    let r0 = state.r0();
    let x_k = basis_combination(state, s_k);
    let mut s_prev = DVector::zeros(k);
    for i in 0..s_km1.len() {
        s_prev[i] = s_km1[i];
    }
    let x_km1 = basis_combination(state, &s_prev);
    let gbar = |x: &DVector<f64>| -> Result<f64> {
        let t = op.apply(x)? - &r0;
        Ok(0.5 * t.dot(&state.rbar_apply(&t)))
    };
    let kval = gbar(&x_km1)? - gbar(&x_k)?;

    let q = |x: &DVector<f64>| -> Result<f64> {
        let r = &r0 - op.apply(x)?;
        let mut acc = 0.0;
        for i in 1..=state.num_u() {
            let ui = state.u_col(i - 1);
            acc += r.dot(&state.error_apply(i, ui)?) * ui.dot(&r);
        }
        Ok(acc)
    };
    let err = 0.5 * (q(&x_km1)? - q(&x_k)?);
    Ok((kval, err))
}

/// Smoothed ℓp data objective Σ_j ((Ax−b)_j² + τ²)^{p/2} / p — the function
/// the reweighting scheme majorizes.
pub fn smoothed_lp_objective(
    op: &Operator,
    b: &DVector<f64>,
    x: &DVector<f64>,
    p: f64,
    tau: f64,
) -> Result<f64> {
    let r = op.apply(x)? - b;
    Ok(r.iter()
        .map(|v| (v * v + tau * tau).powf(p / 2.0))
        .sum::<f64>()
        / p)
}

fn basis_combination(state: &FgkState, s: &DVector<f64>) -> DVector<f64> {
    let mut x = DVector::zeros(state.v_col(0).len());
    for i in 0..s.len().min(state.num_v()) {
        x.axpy(s[i], state.v_col(i), 1.0);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fgk::fgk_init;
    use crate::operators::standard_normal;
    use crate::solvers::{solve_projected_apd, solve_projected_dap};
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_dense(m: usize, n: usize, seed: u64) -> Operator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Operator::dense(DMatrix::from_fn(m, n, |_, _| standard_normal(&mut rng)))
    }

    #[test]
    fn opnorm_identity_is_one() {
        let op = Operator::identity(10);
        let est = estimate_opnorm(&op, 5, 0).unwrap();
        assert!((est - 1.0).abs() <= 1e-6, "estimate {est}");
        assert!(estimate_opnorm(&op, 1, 0).is_err());
    }

    #[test]
    fn opnorm_recovers_dominant_singular_value() {
        let op = Operator::diagonal(DVector::from_column_slice(&[5.0, 1.0, 1.0]));
        let est = estimate_opnorm(&op, 10, 1).unwrap();
        assert!((est - 5.0).abs() <= 1e-4, "estimate {est}");
    }

    #[test]
    fn opnorm_estimate_nondecreasing_in_iterations() {
        for seed in 0..20u64 {
            let op = random_dense(25, 18, 1000 + seed);
            let mut prev = 0.0;
            for iters in [2, 4, 8, 14] {
                let est = estimate_opnorm(&op, iters, seed).unwrap();
                assert!(est >= prev - 1e-12, "seed {seed}: {est} < {prev}");
                prev = est;
            }
        }
    }

    #[test]
    fn gradient_gap_is_zero_for_fixed_weights() {
        let op = random_dense(12, 8, 3);
        let d = DVector::from_element(12, 1.3);
        let r0 = {
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            crate::operators::standard_normal_vector(12, &mut rng)
        };
        let mut st = fgk_init(&op, &r0, &d).unwrap();
        for _ in 0..4 {
            st.step(&op, &d).unwrap();
        }
        let s = solve_projected_dap(&st).unwrap().s;
        let gap = gradient_gap_bound(&st, &s, &op, 0).unwrap();
        assert!(gap.true_gap <= 1e-12);
        assert!(gap.bound <= 1e-12);
        let loose = gradient_gap_bound_loose(&st, &s, 10.0).unwrap();
        assert!(loose <= 1e-12);
    }

    #[test]
    fn gradient_gap_dense_oracle_small_case() {
        // k=1, R1 = diag(2,1,1), R2 = I on a dense 3×2 problem; assemble
        // both sides densely and check true <= bound.
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.5, -1.0, 2.0, 0.3]);
        let op = Operator::dense(a.clone());
        let r0 = DVector::from_column_slice(&[1.0, -1.0, 0.5]);
        let d1 = DVector::from_column_slice(&[2.0, 1.0, 1.0]);
        let d2 = DVector::from_element(3, 1.0);
        let mut st = fgk_init(&op, &r0, &d1).unwrap();
        st.step(&op, &d2).unwrap();
        let s = solve_projected_dap(&st).unwrap().s;
        let gap = gradient_gap_bound(&st, &s, &op, 7).unwrap();

        // dense oracle: only E_1 is nonzero here, so the gap vector is
        // A^T E_1 u_1 (u_1^T t)
        let u1 = st.u_col(0).clone();
        let e1 = DMatrix::from_diagonal(&(&d1 - &d2));
        let x = st.v_col(0) * s[0];
        let t = &a * &x - &r0;
        let dense_gap = (a.transpose() * (&e1 * (&u1 * (u1.transpose() * &t)))).norm();
        assert!((gap.true_gap - dense_gap).abs() <= 1e-12 * (1.0 + dense_gap));
        assert!(gap.true_gap <= gap.bound + 1e-12);
    }

    #[test]
    fn doubling_the_weight_gap_doubles_the_first_bound_terms() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.5, -1.0, 2.0, 0.3]);
        let op = Operator::dense(a);
        let r0 = DVector::from_column_slice(&[1.0, -1.0, 0.5]);
        let d2 = DVector::from_element(3, 1.0);
        let gap_for = |delta: f64| {
            let d1 = DVector::from_column_slice(&[1.0 + delta, 1.0, 1.0]);
            let mut st = fgk_init(&op, &r0, &d1).unwrap();
            st.step(&op, &d2).unwrap();
            let s = solve_projected_dap(&st).unwrap().s;
            gradient_gap_bound(&st, &s, &op, 3).unwrap()
        };
        let g1 = gap_for(0.5);
        let g2 = gap_for(1.0);
        // E_1 scales linearly; the iterates shift slightly because v1 depends
        // on R1, so allow a loose factor window around 2.
        assert!(g2.true_gap > 1.2 * g1.true_gap);
        assert!(g2.bound > 1.2 * g1.bound);
    }

    #[test]
    fn tight_bound_below_loose_bound_on_random_runs() {
        for seed in 0..20u64 {
            let m = 14 + (seed % 4) as usize;
            let op = random_dense(m, 9, 2000 + seed);
            let norm_a = OPNORM_INFLATION * estimate_opnorm(&op, 8, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r0 = crate::operators::standard_normal_vector(m, &mut rng);
            let mut diag = DVector::from_fn(m, |_, _| 0.5 + 1.5 * rng.gen::<f64>());
            let mut st = fgk_init(&op, &r0, &diag).unwrap();
            for _ in 0..6 {
                diag = DVector::from_fn(m, |_, _| 0.5 + 1.5 * rng.gen::<f64>());
                st.step(&op, &diag).unwrap();
            }
            let s = solve_projected_dap(&st).unwrap().s;
            let gap = gradient_gap_bound(&st, &s, &op, seed).unwrap();
            let loose = gradient_gap_bound_loose(&st, &s, norm_a).unwrap();
            let scale = 1.0 + gap.bound.abs();
            assert!(gap.true_gap <= gap.bound + 1e-10 * scale, "seed {seed}");
            assert!(gap.bound <= loose + 1e-10 * scale, "seed {seed}");
        }
    }

    #[test]
    fn loose_and_tight_coincide_for_identity_operator() {
        // With A = I, ‖AᵀE_i‖ = ‖E_i‖, so the two bounds agree up to the
        // power-iteration estimate. Distinct per-step spikes keep the
        // flexible subspace from collapsing and make each estimate exact.
        let m = 10;
        let op = Operator::identity(m);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r0 = crate::operators::standard_normal_vector(m, &mut rng);
        let mut d1 = DVector::from_element(m, 1.0);
        d1[3] = 4.0;
        let mut d2 = DVector::from_element(m, 1.0);
        d2[7] = 1.5;
        let d3 = DVector::from_element(m, 1.0);
        let mut st = fgk_init(&op, &r0, &d1).unwrap();
        assert_eq!(
            st.step(&op, &d2).unwrap(),
            crate::fgk::StepOutcome::Advanced
        );
        assert_eq!(
            st.step(&op, &d3).unwrap(),
            crate::fgk::StepOutcome::Advanced
        );
        let s = solve_projected_dap(&st).unwrap().s;
        let gap = gradient_gap_bound(&st, &s, &op, 11).unwrap();
        let loose = gradient_gap_bound_loose(&st, &s, 1.0).unwrap();
        assert!(
            (gap.bound - loose).abs() <= 0.05 * loose.max(1e-12),
            "tight {} vs loose {}",
            gap.bound,
            loose
        );
    }

    #[test]
    fn functional_gap_zero_cases() {
        // fixed weights → both sides vanish
        let op = random_dense(10, 7, 8);
        let d = DVector::from_element(10, 0.8);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r0 = crate::operators::standard_normal_vector(10, &mut rng);
        let mut st = fgk_init(&op, &r0, &d).unwrap();
        for _ in 0..3 {
            st.step(&op, &d).unwrap();
        }
        let s = solve_projected_dap(&st).unwrap().s;
        let gap = functional_gap_bound(&st, &s, &op).unwrap();
        assert!(gap.true_gap <= 1e-12 && gap.bound <= 1e-12);
    }

    #[test]
    fn functional_gap_dense_case_true_below_bound() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.4, -0.6, 2.0, 0.9, 0.1]);
        let op = Operator::dense(a);
        let r0 = DVector::from_column_slice(&[0.7, -0.2, 1.1]);
        let d1 = DVector::from_column_slice(&[3.0, 1.0, 0.5]);
        let d2 = DVector::from_column_slice(&[1.0, 1.0, 1.0]);
        let mut st = fgk_init(&op, &r0, &d1).unwrap();
        st.step(&op, &d2).unwrap();
        let s = solve_projected_apd(&st).unwrap().s;
        let gap = functional_gap_bound(&st, &s, &op).unwrap();
        assert!(gap.true_gap <= gap.bound + 1e-12, "{gap:?}");
        assert!(gap.true_gap > 0.0, "weights differ, gap should be nonzero");
    }

    #[test]
    fn functional_gap_vanishes_at_zero_projected_residual() {
        // choose s so that M_k s = beta e1 exactly (k = 1 suffices when the
        // subdiagonal entry is negligible relative to the system) — instead,
        // verify directly that the bound's projected-residual factor drives
        // both quantities: scale s toward the exact projected solution of
        // min ||M s - beta e1|| and watch the gap shrink.
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.4, -0.6, 2.0, 0.9, 0.1]);
        let op = Operator::dense(a);
        let r0 = DVector::from_column_slice(&[0.7, -0.2, 1.1]);
        let d1 = DVector::from_column_slice(&[3.0, 1.0, 0.5]);
        let d2 = DVector::from_column_slice(&[1.0, 1.0, 1.0]);
        let mut st = fgk_init(&op, &r0, &d1).unwrap();
        st.step(&op, &d2).unwrap();
        st.step(&op, &DVector::from_element(3, 1.2)).unwrap();
        // least-squares s for M s ≈ beta e1
        let m = st.m_matrix();
        let mut rhs = DVector::zeros(3);
        rhs[0] = st.beta();
        let s = m.clone().svd(true, true).solve(&rhs, 0.0).unwrap();
        let gap = functional_gap_bound(&st, &s, &op).unwrap();
        let res = (m * &s - rhs).norm();
        // bound is proportional to the projected residual size
        assert!(gap.bound <= 2.0 * res * 10.0 + 1e-10);
        assert!(gap.true_gap <= gap.bound + 1e-12);
    }

    #[test]
    fn margin_err_is_zero_for_fixed_weights_and_k_nonnegative() {
        let op = random_dense(12, 8, 31);
        let d = DVector::from_element(12, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let r0 = crate::operators::standard_normal_vector(12, &mut rng);
        let mut st = fgk_init(&op, &r0, &d).unwrap();
        st.step(&op, &d).unwrap();
        let s1 = solve_projected_apd(&st).unwrap().s;
        st.step(&op, &d).unwrap();
        let s2 = solve_projected_apd(&st).unwrap().s;
        let (kval, err) = monotonicity_margin(&st, &op, &s2, &s1).unwrap();
        assert!(err.abs() <= 1e-14);
        assert!(kval >= -1e-10);
    }

    #[test]
    fn margin_certificate_verified_against_direct_objective() {
        // seeded lp-weighted 10×8 problem, k = 2: whenever K > err the
        // smoothed objective must strictly decrease
        let op = random_dense(10, 8, 41);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let x_star = crate::operators::standard_normal_vector(8, &mut rng);
        let mut b = op.apply(&x_star).unwrap();
        b[2] += 3.0; // outlier
        let (p, tau) = (1.0, 1e-2);
        let x0 = DVector::zeros(8);
        let w0 = crate::weights::lp_weights(&(op.apply(&x0).unwrap() - &b), p, tau).unwrap();
        let r0 = &b - op.apply(&x0).unwrap();
        let mut st = fgk_init(&op, &r0, &w0).unwrap();
        // R2 = R(x0) as well
        st.step(&op, &w0).unwrap();
        let s1 = solve_projected_apd(&st).unwrap().s;
        let x1 = st.v_col(0) * s1[0];
        let w2 = crate::weights::lp_weights(&(op.apply(&x1).unwrap() - &b), p, tau).unwrap();
        st.step(&op, &w2).unwrap();
        let s2 = solve_projected_apd(&st).unwrap().s;
        let x2 = {
            let mut x = DVector::zeros(8);
            x.axpy(s2[0], st.v_col(0), 1.0);
            x.axpy(s2[1], st.v_col(1), 1.0);
            x
        };
        let (kval, err) = monotonicity_margin(&st, &op, &s2, &s1).unwrap();
        if kval > err {
            let f1 = smoothed_lp_objective(&op, &b, &x1, p, tau).unwrap();
            let f2 = smoothed_lp_objective(&op, &b, &x2, p, tau).unwrap();
            assert!(
                f2 < f1 + 1e-10 * f1.abs().max(1.0),
                "K={kval} err={err} f1={f1} f2={f2}"
            );
        }
        // the exact correction identity: g-drop equals K - err
        let d_last = st.weight_diags().last().unwrap().clone();
        let g = |x: &DVector<f64>| {
            let t = op.apply(x).unwrap() - &r0;
            0.5 * t.dot(&d_last.component_mul(&t))
        };
        let g_drop = g(&x1) - g(&x2);
        assert!((g_drop - (kval - err)).abs() <= 1e-10 * (1.0 + g_drop.abs()));
    }

    #[test]
    fn margin_err_exactly_zero_on_first_iteration_when_weights_agree() {
        // R1 = R2 (the first iterate only exists after v2), so every E_i in
        // the correction vanishes identically
        let op = random_dense(9, 6, 51);
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let r0 = crate::operators::standard_normal_vector(9, &mut rng);
        let w = DVector::from_fn(9, |_, _| 0.3 + rng.gen::<f64>());
        let mut st = fgk_init(&op, &r0, &w).unwrap();
        st.step(&op, &w).unwrap();
        let s1 = solve_projected_apd(&st).unwrap().s;
        let s0 = DVector::zeros(0);
        let (kval, err) = monotonicity_margin(&st, &op, &s1, &s0).unwrap();
        assert_eq!(err, 0.0);
        assert!(kval >= -1e-12);
    }
}

//! Shared test oracles, independent of the implementation paths they check:
//! textbook LSQR and LSMR recurrences (Paige & Saunders 1982; Fong &
//! Saunders 2011) and small problem generators.

#![allow(dead_code)]

use flexgk::operators::{standard_normal_vector, Operator};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Textbook LSQR on min ‖Ax − b‖₂ from x = 0, returning the iterate after
/// every step. Pure recurrence form with Givens rotations, no
/// reorthogonalization, no stopping tests.
pub fn textbook_lsqr(op: &Operator, b: &DVector<f64>, k_max: usize) -> Vec<DVector<f64>> {
    let n = op.cols();
    let mut iterates = Vec::with_capacity(k_max);
    let beta1 = b.norm();
    if beta1 == 0.0 {
        return iterates;
    }
    let mut u = b / beta1;
    let mut v = op.apply_adjoint(&u).unwrap();
    let mut alpha = v.norm();
    if alpha == 0.0 {
        return iterates;
    }
    v /= alpha;
    let mut w = v.clone();
    let mut x = DVector::zeros(n);
    let mut phibar = beta1;
    let mut rhobar = alpha;
    for _ in 0..k_max {
        let mut u_next = op.apply(&v).unwrap() - &u * alpha;
        let beta = u_next.norm();
        if beta > 0.0 {
            u_next /= beta;
            u = u_next;
        }
        let mut v_next = op.apply_adjoint(&u).unwrap() - &v * beta;
        alpha = v_next.norm();
        if alpha > 0.0 {
            v_next /= alpha;
            v = v_next;
        }
        let rho = rhobar.hypot(beta);
        let c = rhobar / rho;
        let s = beta / rho;
        let theta = s * alpha;
        rhobar = -c * alpha;
        let phi = c * phibar;
        phibar *= s;
        x.axpy(phi / rho, &w, 1.0);
        w = &v - &w * (theta / rho);
        iterates.push(x.clone());
        if beta == 0.0 || alpha == 0.0 {
            break;
        }
    }
    iterates
}

/// Textbook LSMR on min ‖Ax − b‖₂ from x = 0, iterates after every step.
pub fn textbook_lsmr(op: &Operator, b: &DVector<f64>, k_max: usize) -> Vec<DVector<f64>> {
    let n = op.cols();
    let mut iterates = Vec::with_capacity(k_max);
    let beta1 = b.norm();
    if beta1 == 0.0 {
        return iterates;
    }
    let mut u = b / beta1;
    let mut v = op.apply_adjoint(&u).unwrap();
    let alpha1 = v.norm();
    if alpha1 == 0.0 {
        return iterates;
    }
    v /= alpha1;
    let mut alpha = alpha1;
    let mut alphabar = alpha1;
    let mut zetabar = alpha1 * beta1;
    let mut rho = 1.0f64;
    let mut rhobar = 1.0f64;
    let mut cbar = 1.0f64;
    let mut sbar = 0.0f64;
    let mut h = v.clone();
    let mut hbar = DVector::zeros(n);
    let mut x = DVector::zeros(n);
    for _ in 0..k_max {
        let mut u_next = op.apply(&v).unwrap() - &u * alpha;
        let beta = u_next.norm();
        if beta > 0.0 {
            u_next /= beta;
            u = u_next;
        }
        let mut v_next = op.apply_adjoint(&u).unwrap() - &v * beta;
        alpha = v_next.norm();
        if alpha > 0.0 {
            v_next /= alpha;
            v = v_next;
        }
        // rotation eliminating the lower bidiagonal
        let rho_old = rho;
        rho = alphabar.hypot(beta);
        let c = alphabar / rho;
        let s = beta / rho;
        let theta_new = s * alpha;
        alphabar = c * alpha;
        // second rotation
        let rhobar_old = rhobar;
        let thetabar = sbar * rho;
        rhobar = (cbar * rho).hypot(theta_new);
        cbar = cbar * rho / rhobar;
        sbar = theta_new / rhobar;
        let zeta = cbar * zetabar;
        zetabar = -sbar * zetabar;
        hbar = &h - &hbar * (thetabar * rho / (rho_old * rhobar_old));
        x.axpy(zeta / (rho * rhobar), &hbar, 1.0);
        h = &v - &h * (theta_new / rho);
        iterates.push(x.clone());
        if beta == 0.0 || alpha == 0.0 {
            break;
        }
    }
    iterates
}

/// Seeded dense Gaussian operator.
pub fn random_dense_op(m: usize, n: usize, seed: u64) -> Operator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Operator::dense(DMatrix::from_fn(m, n, |_, _| {
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }))
}

pub fn random_vector(len: usize, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    standard_normal_vector(len, &mut rng)
}

/// Strictly positive random diagonal in [lo, lo + span].
pub fn random_diag(len: usize, lo: f64, span: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(len, |_, _| lo + span * rng.gen::<f64>())
}

/// Split-preconditioned view of (op, b): the dense pair (D^{1/2}A, D^{1/2}b).
pub fn split_preconditioned(
    op: &Operator,
    b: &DVector<f64>,
    diag: &DVector<f64>,
) -> (Operator, DVector<f64>) {
    let sqrt_d = diag.map(f64::sqrt);
    let dense = op.to_dense().unwrap();
    let mut scaled = dense.clone();
    for i in 0..dense.nrows() {
        for j in 0..dense.ncols() {
            scaled[(i, j)] *= sqrt_d[i];
        }
    }
    (Operator::dense(scaled), sqrt_d.component_mul(b))
}

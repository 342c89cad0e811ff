//! Diagonal inverse-covariance construction for ℓp data fitting.
//!
//! The reweighting rule is R⁻¹ = diag(((Ax̃ − b)² + τ²)^((p−2)/2)), applied
//! entrywise; τ > 0 keeps the diagonal finite when residual entries vanish.

use crate::error::{Error, Result};
use crate::operators::Operator;
use nalgebra::DVector;

/// How the per-iteration diagonal is produced.
#[derive(Debug, Clone)]
pub enum WeightPolicy {
    /// Iteration-dependent ℓp weights from the current residual.
    Lp { p: f64, tau: f64 },
    /// A fixed diagonal, independent of the iterate.
    Fixed { diag: DVector<f64> },
}

impl WeightPolicy {
    pub fn lp(p: f64, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "smoothing parameter tau must be positive, got {tau}"
            )));
        }
        if !(p > 0.0 && p <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "p must lie in (0, 2], got {p}"
            )));
        }
        Ok(WeightPolicy::Lp { p, tau })
    }

    pub fn fixed(diag: DVector<f64>) -> Result<Self> {
        if diag.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
            return Err(Error::InvalidParameter(
                "fixed weight diagonal must be strictly positive and finite".into(),
            ));
        }
        Ok(WeightPolicy::Fixed { diag })
    }

    pub fn identity(m: usize) -> Self {
        WeightPolicy::Fixed {
            diag: DVector::from_element(m, 1.0),
        }
    }
}

/// Entry j of the result is (residual_j² + τ²)^((p−2)/2).
pub fn lp_weights(residual: &DVector<f64>, p: f64, tau: f64) -> Result<DVector<f64>> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "smoothing parameter tau must be positive, got {tau}"
        )));
    }
    if !(p > 0.0 && p <= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "p must lie in (0, 2], got {p}"
        )));
    }
    let e = (p - 2.0) / 2.0;
    Ok(residual.map(|r| (r * r + tau * tau).powf(e)))
}

/// Weights the policy assigns at iterate `x`: the lp rule evaluates the
/// residual A x − b, the fixed rule ignores `x` entirely.
pub fn weights_at(
    policy: &WeightPolicy,
    x: &DVector<f64>,
    op: &Operator,
    b: &DVector<f64>,
) -> Result<DVector<f64>> {
    match policy {
        WeightPolicy::Fixed { diag } => Ok(diag.clone()),
        WeightPolicy::Lp { p, tau } => {
            let residual = op.apply(x)? - b;
            lp_weights(&residual, *p, *tau)
        }
    }
}

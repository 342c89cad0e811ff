//! Restart criteria and the outer-cycle reset protocol.
//!
//! Two triggers are provided: a weight-drift criterion that fires the first
//! time any retained source's inexactness magnitude stops decreasing, and a
//! residual criterion that fires when the data residual grows a fixed
//! fraction above the cycle start.

use crate::error::{Error, Result};
use crate::operators::Operator;
use nalgebra::DVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestartMode {
    None,
    Weights,
    Residual,
    /// The per-method pairing: weights for dap/dap-lsmr, residual for apd.
    Auto,
}

#[derive(Debug, Clone)]
pub struct RestartPolicy {
    pub mode: RestartMode,
    pub tol: f64,
    pub max_cycles: usize,
    /// Alternative reading of the drift criterion: compare |diag| entries
    /// across adjacent diagonal positions instead of across iterations.
    pub entrywise_drift: bool,
}

impl RestartPolicy {
    pub fn new(mode: RestartMode, tol: f64, max_cycles: usize) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "restart tol must be positive, got {tol}"
            )));
        }
        if max_cycles == 0 {
            return Err(Error::InvalidParameter("max_cycles must be >= 1".into()));
        }
        Ok(RestartPolicy {
            mode,
            tol,
            max_cycles,
            entrywise_drift: false,
        })
    }

    pub fn none() -> Self {
        RestartPolicy {
            mode: RestartMode::None,
            tol: 0.1,
            max_cycles: 1,
            entrywise_drift: false,
        }
    }
}

impl Default for RestartPolicy {
    fn default() -> Self {
        RestartPolicy {
            mode: RestartMode::None,
            tol: 0.1,
            max_cycles: 10,
            entrywise_drift: false,
        }
    }
}

/// Tracks, per retained weight source i, the scalar drift
/// e_i(k) = max_j |[R_i⁻¹]_j − [R_{k+2}⁻¹]_j| across iterations and fires at
/// the first k where any e_i increases — the inexactness history has stopped
/// decreasing.
#[derive(Debug, Clone, Default)]
pub struct WeightDriftTracker {
    previous: Vec<f64>,
    entrywise: bool,
}

impl WeightDriftTracker {
    pub fn new(entrywise: bool) -> Self {
        WeightDriftTracker {
            previous: Vec::new(),
            entrywise,
        }
    }

    /// Observes the state after step k with `next_diag` = R_{k+2}⁻¹ = R⁻¹(x_k);
    /// returns true when a restart should happen.
    pub fn check(&mut self, retained_diags: &[DVector<f64>], next_diag: &DVector<f64>) -> bool {
        if self.entrywise {
            return retained_diags.iter().any(|di| {
                let drift = (di - next_diag).abs();
                (1..drift.len()).any(|j| drift[j] - drift[j - 1] > 0.0)
            });
        }
        let mut fired = false;
        let mut current = Vec::with_capacity(retained_diags.len());
        for (i, di) in retained_diags.iter().enumerate() {
            let e = (di - next_diag).abs().max();
            if i < self.previous.len() && e > self.previous[i] {
                fired = true;
            }
            current.push(e);
        }
        self.previous = current;
        fired
    }
}

/// Residual criterion: (‖Ax_k − b‖ − ‖Ax₀ − b‖)/‖Ax_k − b‖ > tol, where x₀
/// is the current cycle's starting iterate. An exact solve (zero residual)
/// never restarts.
pub fn check_restart_residual(
    op: &Operator,
    b: &DVector<f64>,
    x_k: &DVector<f64>,
    x_0: &DVector<f64>,
    tol: f64,
) -> Result<bool> {
    let rk = (op.apply(x_k)? - b).norm();
    if rk == 0.0 {
        return Ok(false);
    }
    let rs = (op.apply(x_0)? - b).norm();
    Ok((rk - rs) / rk > tol)
}

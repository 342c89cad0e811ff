//! Flexible Golub-Kahan factorization with iteration-dependent diagonal
//! preconditioning applied to the right of the adjoint.
//!
//! After k completed steps the state carries orthonormal blocks
//! U ∈ ℝ^{m×(k+1)}, V ∈ ℝ^{n×(k+1)}, preconditioned columns
//! Y = [R₁⁻¹u₁, …, R_{k+1}⁻¹u_{k+1}], an upper-Hessenberg M ∈ ℝ^{(k+1)×k}
//! and an upper-triangular T ∈ ℝ^{(k+1)×(k+1)} with
//!
//!   A V_k = U_{k+1} M_k,      Aᵀ Y_{k+1} = V_{k+1} T_{k+1}.
//!
//! The same blocks satisfy the rank-accumulated form Aᵀ R̄_{k+1} U = V T with
//! R̄_{k+1} = Σᵢ R_i⁻¹ u_i u_iᵀ, and the inexact form
//! (A + ℰ)ᵀ R_{k+1}⁻¹ U = V T, where the inexactness acts through the
//! diagonal differences E_i = R_i⁻¹ − R_{k+1}⁻¹. ℰ is m×m and dense, so it is
//! never materialized; every use goes through [`FgkState::error_apply`] and
//! the u_iu_iᵀ expansion.

use crate::error::{Error, Result};
use crate::operators::Operator;
use nalgebra::{DMatrix, DVector};

/// Relative breakdown threshold for the orthogonalized recurrence vectors.
pub const BREAKDOWN_RTOL: f64 = 1e-14;

/// Which recurrence hit an invariant subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreakdownKind {
    /// ‖u‖ vanished after orthogonalizing A vₖ: the M column was recorded
    /// (its subdiagonal entry is negligible) but no new basis columns exist.
    USide,
    /// ‖v‖ vanished after orthogonalizing Aᵀyₖ₊₁: u, y and both coefficient
    /// columns were recorded, but V gained no column.
    VSide,
}

/// Outcome of one factorization step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Advanced,
    Breakdown(BreakdownKind),
}

#[derive(Debug, Clone)]
pub struct FgkState {
    beta: f64,
    u_cols: Vec<DVector<f64>>,
    v_cols: Vec<DVector<f64>>,
    y_cols: Vec<DVector<f64>>,
    /// Column of step i (0-based) holds M entries for rows 0..=i+1.
    m_cols: Vec<Vec<f64>>,
    /// t_cols[0] = [t₁₁]; the column of step i holds T entries for rows 0..=i+1.
    t_cols: Vec<Vec<f64>>,
    weight_diags: Vec<DVector<f64>>,
    k: usize,
    breakdown: Option<BreakdownKind>,
    reorth: bool,
    /// Running lower estimate of ‖A‖ from the ‖A vᵢ‖ seen so far.
    norm_est: f64,
}

/// Starts the factorization: u₁ = r₀/β, y₁ = R₁⁻¹u₁, v₁ = Aᵀy₁/t₁₁.
///
/// Reorthogonalization (a second modified-Gram-Schmidt pass per step) is on;
/// use [`fgk_init_with_reorth`] to disable it.
pub fn fgk_init(op: &Operator, r0: &DVector<f64>, first_diag: &DVector<f64>) -> Result<FgkState> {
    fgk_init_with_reorth(op, r0, first_diag, true)
}

pub fn fgk_init_with_reorth(
    op: &Operator,
    r0: &DVector<f64>,
    first_diag: &DVector<f64>,
    reorth: bool,
) -> Result<FgkState> {
    if r0.len() != op.rows() {
        return Err(Error::DimensionMismatch {
            expected: op.rows(),
            actual: r0.len(),
        });
    }
    check_diag(first_diag, op.rows())?;
    let beta = r0.norm();
    if beta == 0.0 {
        return Err(Error::ZeroResidual);
    }
    let u1 = r0 / beta;
    let y1 = first_diag.component_mul(&u1);
    let w = op.apply_adjoint(&y1)?;
    let t11 = w.norm();
    if t11 == 0.0 {
        return Err(Error::Breakdown {
            stage: "adjoint",
            step: 0,
        });
    }
    let v1 = w / t11;
    Ok(FgkState {
        beta,
        u_cols: vec![u1],
        v_cols: vec![v1],
        y_cols: vec![y1],
        m_cols: Vec::new(),
        t_cols: vec![vec![t11]],
        weight_diags: vec![first_diag.clone()],
        k: 0,
        breakdown: None,
        reorth,
        norm_est: 0.0,
    })
}

impl FgkState {
    /// Advances the factorization by one step using `next_diag` as R_{k+2}⁻¹.
    ///
    /// The caller supplies the diagonal because iteration-dependent weights
    /// can only be computed once the previous step's iterate is available;
    /// the solver orchestrates that ordering.
    pub fn step(&mut self, op: &Operator, next_diag: &DVector<f64>) -> Result<StepOutcome> {
        if self.breakdown.is_some() {
            return Err(Error::InvalidParameter(
                "cannot step a factorization past breakdown".into(),
            ));
        }
        check_diag(next_diag, op.rows())?;
        let i = self.k; // 0-based step index; produces column i of M
        let mut u = op.apply(self.v_cols.last().expect("v1 exists"))?;
        self.norm_est = self.norm_est.max(u.norm());
        let passes = if self.reorth { 2 } else { 1 };

        let mut m_col = vec![0.0; i + 2];
        for _ in 0..passes {
            for (j, uj) in self.u_cols.iter().enumerate() {
                let c = u.dot(uj);
                m_col[j] += c;
                u.axpy(-c, uj, 1.0);
            }
        }
        let nu = u.norm();
        m_col[i + 1] = nu;
        if nu <= BREAKDOWN_RTOL * self.norm_est {
            self.m_cols.push(m_col);
            self.k += 1;
            self.breakdown = Some(BreakdownKind::USide);
            return Ok(StepOutcome::Breakdown(BreakdownKind::USide));
        }
        let u_next = u / nu;
        let y_next = next_diag.component_mul(&u_next);
        let mut v = op.apply_adjoint(&y_next)?;
        let v_scale = v.norm().max(self.norm_est);

        let mut t_col = vec![0.0; i + 2];
        for _ in 0..passes {
            for (j, vj) in self.v_cols.iter().enumerate() {
                let c = v.dot(vj);
                t_col[j] += c;
                v.axpy(-c, vj, 1.0);
            }
        }
        let nv = v.norm();
        t_col[i + 1] = nv;
        if nv <= BREAKDOWN_RTOL * v_scale {
            self.u_cols.push(u_next);
            self.y_cols.push(y_next);
            self.weight_diags.push(next_diag.clone());
            self.m_cols.push(m_col);
            self.t_cols.push(t_col);
            self.k += 1;
            self.breakdown = Some(BreakdownKind::VSide);
            return Ok(StepOutcome::Breakdown(BreakdownKind::VSide));
        }
        let v_next = v / nv;
        self.u_cols.push(u_next);
        self.y_cols.push(y_next);
        self.v_cols.push(v_next);
        self.weight_diags.push(next_diag.clone());
        self.m_cols.push(m_col);
        self.t_cols.push(t_col);
        self.k += 1;
        Ok(StepOutcome::Advanced)
    }

    /// Completed step count k.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn t11(&self) -> f64 {
        self.t_cols[0][0]
    }

    pub fn breakdown(&self) -> Option<BreakdownKind> {
        self.breakdown
    }

    pub fn reorth(&self) -> bool {
        self.reorth
    }

    pub fn num_u(&self) -> usize {
        self.u_cols.len()
    }

    pub fn num_v(&self) -> usize {
        self.v_cols.len()
    }

    pub fn u_col(&self, i: usize) -> &DVector<f64> {
        &self.u_cols[i]
    }

    pub fn v_col(&self, i: usize) -> &DVector<f64> {
        &self.v_cols[i]
    }

    pub fn y_col(&self, i: usize) -> &DVector<f64> {
        &self.y_cols[i]
    }

    pub fn weight_diags(&self) -> &[DVector<f64>] {
        &self.weight_diags
    }

    /// r₀ reconstructed as β·u₁.
    pub fn r0(&self) -> DVector<f64> {
        &self.u_cols[0] * self.beta
    }

    /// M_k as a dense (k+1)×k matrix (upper Hessenberg).
    pub fn m_matrix(&self) -> DMatrix<f64> {
        let k = self.k;
        let mut m = DMatrix::zeros(k + 1, k);
        for (i, col) in self.m_cols.iter().enumerate() {
            for (j, &val) in col.iter().enumerate() {
                if j <= k {
                    m[(j, i)] = val;
                }
            }
        }
        m
    }

    /// T_{k+1} as a dense (k+1)×(k+1) upper-triangular matrix. A column cut
    /// short by breakdown stays zero; it only ever multiplies the vanished
    /// subdiagonal row of M.
    pub fn t_matrix(&self) -> DMatrix<f64> {
        let k = self.k;
        let mut t = DMatrix::zeros(k + 1, k + 1);
        for (i, col) in self.t_cols.iter().enumerate() {
            for (j, &val) in col.iter().enumerate() {
                t[(j, i)] = val;
            }
        }
        t
    }

    /// T_{k,k+1} M_k — the k×k projected matrix of the classical inexact path.
    pub fn projected_matrix(&self) -> DMatrix<f64> {
        let k = self.k;
        let t = self.t_matrix();
        let m = self.m_matrix();
        t.rows(0, k) * m
    }

    /// T_{k+1} M_k — the (k+1)×k matrix of the minimal-residual variant.
    pub fn full_projected_matrix(&self) -> DMatrix<f64> {
        self.t_matrix() * self.m_matrix()
    }

    /// Y_{k+1}ᵀ r₀ padded with zeros for any basis column lost to breakdown.
    pub fn y_t_r0(&self) -> DVector<f64> {
        let k = self.k;
        let r0 = self.r0();
        DVector::from_fn(k + 1, |i, _| {
            if i < self.y_cols.len() {
                self.y_cols[i].dot(&r0)
            } else {
                0.0
            }
        })
    }

    /// R̄_{k+1} u = Σᵢ R_i⁻¹ uᵢ (uᵢᵀ u), i.e. Y (Uᵀ u).
    pub fn rbar_apply(&self, u: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(u.len());
        for (ui, yi) in self.u_cols.iter().zip(self.y_cols.iter()) {
            out.axpy(ui.dot(u), yi, 1.0);
        }
        out
    }

    /// E_i^{(k)} w = (R_i⁻¹ − R_{k+1}⁻¹) w for 1-based i ≤ k+1 (entrywise).
    pub fn error_apply(&self, i: usize, w: &DVector<f64>) -> Result<DVector<f64>> {
        let count = self.weight_diags.len();
        if i == 0 || i > count {
            return Err(Error::InvalidParameter(format!(
                "error_apply index {i} out of range 1..={count}"
            )));
        }
        let di = &self.weight_diags[i - 1];
        let dk = &self.weight_diags[count - 1];
        Ok(w.zip_map(&(di - dk), |wj, ej| wj * ej))
    }

    /// ℰᵀ R_{k+1}⁻¹ t through the u_iu_iᵀ expansion:
    /// Aᵀ Σᵢ E_i uᵢ (uᵢᵀ t). The diagonal R_{k+1} R_{k+1}⁻¹ product cancels
    /// exactly, so the coefficients are plain inner products with t.
    pub fn inexactness_adjoint_apply(
        &self,
        op: &Operator,
        t: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let mut acc = DVector::zeros(op.rows());
        for (i, ui) in self.u_cols.iter().enumerate() {
            let coeff = ui.dot(t);
            let eiui = self.error_apply(i + 1, ui)?;
            acc.axpy(coeff, &eiui, 1.0);
        }
        op.apply_adjoint(&acc)
    }

    /// Frobenius norms of the four factorization identities:
    /// (a) A V_k − U_{k+1} M_k
    /// (b) Aᵀ R̄_{k+1} U_{k+1} − V_{k+1} T_{k+1}
    /// (c) (A+ℰ)ᵀ R_{k+1}⁻¹ U_{k+1} − V_{k+1} T_{k+1}
    /// (d) Aᵀ R̄_{k+1} A V_k − V_{k+1} T_{k+1} M_k
    pub fn factorization_residuals(&self, op: &Operator) -> Result<FactorizationResiduals> {
        if self.k < 1 {
            return Err(Error::InvalidParameter(
                "factorization residuals need at least one completed step".into(),
            ));
        }
        if self.breakdown.is_some() {
            return Err(Error::InvalidParameter(
                "factorization residuals are undefined past breakdown".into(),
            ));
        }
        let k = self.k;
        let m_mat = self.m_matrix();
        let t_mat = self.t_matrix();
        let tm = &t_mat * &m_mat;
        let d_last = &self.weight_diags[self.weight_diags.len() - 1];

        let mut fgk1 = 0.0;
        let mut lanczos = 0.0;
        for i in 0..k {
            let av = op.apply(&self.v_cols[i])?;
            // (a): column i of A V_k − U_{k+1} M_k
            let mut col = av.clone();
            for (j, uj) in self.u_cols.iter().enumerate() {
                col.axpy(-m_mat[(j, i)], uj, 1.0);
            }
            fgk1 += col.norm_squared();
            // (d): column i of Aᵀ R̄ A V_k − V_{k+1} (T M)
            let mut dcol = op.apply_adjoint(&self.rbar_apply(&av))?;
            for (j, vj) in self.v_cols.iter().enumerate() {
                dcol.axpy(-tm[(j, i)], vj, 1.0);
            }
            lanczos += dcol.norm_squared();
        }

        let mut fgk2 = 0.0;
        let mut igk = 0.0;
        for j in 0..k + 1 {
            let uj = &self.u_cols[j];
            let vt_col = |col: usize| -> DVector<f64> {
                let mut out = DVector::zeros(op.cols());
                for (l, vl) in self.v_cols.iter().enumerate() {
                    out.axpy(t_mat[(l, col)], vl, 1.0);
                }
                out
            };
            // (b)
            let bcol = op.apply_adjoint(&self.rbar_apply(uj))? - vt_col(j);
            fgk2 += bcol.norm_squared();
            // (c): Aᵀ R_{k+1}⁻¹ u_j + ℰᵀ R_{k+1}⁻¹ u_j − (V T)_j with the
            // ℰ product expanded through error_apply.
            let rinv_uj = d_last.component_mul(uj);
            let exact_part = op.apply_adjoint(&rinv_uj)?;
            let inexact_part = self.inexactness_adjoint_apply(op, uj)?;
            let ccol = exact_part + inexact_part - vt_col(j);
            igk += ccol.norm_squared();
        }

        Ok(FactorizationResiduals {
            fgk1: fgk1.sqrt(),
            fgk2: fgk2.sqrt(),
            igk: igk.sqrt(),
            lanczos: lanczos.sqrt(),
        })
    }

    /// max |UᵀU − I| and max |VᵀV − I| entrywise.
    pub fn orthonormality_defect(&self) -> (f64, f64) {
        let defect = |cols: &[DVector<f64>]| {
            let mut worst = 0.0f64;
            for (i, a) in cols.iter().enumerate() {
                for (j, b) in cols.iter().enumerate() {
                    let target = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((a.dot(b) - target).abs());
                }
            }
            worst
        };
        (defect(&self.u_cols), defect(&self.v_cols))
    }
}

/// Frobenius norms of the four equivalent factorization forms.
#[derive(Debug, Clone, Copy)]
pub struct FactorizationResiduals {
    pub fgk1: f64,
    pub fgk2: f64,
    pub igk: f64,
    pub lanczos: f64,
}

impl FactorizationResiduals {
    pub fn max(&self) -> f64 {
        self.fgk1.max(self.fgk2).max(self.igk).max(self.lanczos)
    }
}

fn check_diag(diag: &DVector<f64>, m: usize) -> Result<()> {
    if diag.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: diag.len(),
        });
    }
    if diag.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
        return Err(Error::InvalidParameter(
            "weight diagonal must be strictly positive and finite".into(),
        ));
    }
    Ok(())
}

//! Matrix-free linear operators with verified adjoints.
//!
//! Every operator exposes `apply` (x ↦ Ax) and `apply_adjoint` (y ↦ Aᵀy)
//! and is immutable after construction, so it can be shared read-only
//! across concurrent solver runs.
//!
//! Images are stored as flat vectors in column-major order: pixel
//! (row r, col c) of a `side × side` image lives at index `c * side + r`
//! (row index fastest).

mod blur;
mod tomo;

pub use blur::BlurKernel;
pub use tomo::TomoGeometry;

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Boundary handling for the blur operator. Only zero padding is
/// supported: mass convolved past the image border is dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Zero,
}

/// Kind-specific payload of an [`Operator`].
#[derive(Debug, Clone)]
pub enum Kind {
    /// Explicitly stored dense matrix.
    Dense(DMatrix<f64>),
    /// Entrywise scaling by a diagonal.
    Diagonal(DVector<f64>),
    /// 2-D convolution with a truncated Gaussian PSF, zero-padded.
    Blur(BlurKernel),
    /// Parallel-beam tomography (Siddon line integrals).
    Tomo(TomoGeometry),
    /// Product `first ∘ second`, i.e. x ↦ first(second(x)).
    Composed(Box<Operator>, Box<Operator>),
}

/// An immutable linear map of fixed dimensions `rows × cols`.
#[derive(Debug, Clone)]
pub struct Operator {
    rows: usize,
    cols: usize,
    kind: Kind,
}

impl Operator {
    pub fn dense(matrix: DMatrix<f64>) -> Self {
        let (rows, cols) = matrix.shape();
        Operator {
            rows,
            cols,
            kind: Kind::Dense(matrix),
        }
    }

    pub fn diagonal(entries: DVector<f64>) -> Self {
        let n = entries.len();
        Operator {
            rows: n,
            cols: n,
            kind: Kind::Diagonal(entries),
        }
    }

    pub fn identity(n: usize) -> Self {
        Operator::diagonal(DVector::from_element(n, 1.0))
    }

    /// 2-D Gaussian blur on `side × side` images: convolution with the
    /// normalized truncated kernel exp(−(i²+j²)/(2σ²)), |i|,|j| ≤ halfwidth,
    /// zero-padded at the borders.
    pub fn gaussian_blur(
        side: usize,
        psf_sigma: f64,
        psf_halfwidth: usize,
        boundary: Boundary,
    ) -> Result<Self> {
        let Boundary::Zero = boundary;
        if side == 0 {
            return Err(Error::InvalidParameter("blur side must be >= 1".into()));
        }
        if !(psf_sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "psf sigma must be positive, got {psf_sigma}"
            )));
        }
        if psf_halfwidth >= side {
            return Err(Error::InvalidParameter(format!(
                "psf halfwidth {psf_halfwidth} must be < side {side}"
            )));
        }
        let n = side * side;
        Ok(Operator {
            rows: n,
            cols: n,
            kind: Kind::Blur(BlurKernel::new(side, psf_sigma, psf_halfwidth)),
        })
    }

    /// Parallel-beam tomography operator of shape (n_rays·n_angles) × grid_n².
    /// Angles are uniform in [0°, 180°); rays span the grid's circumscribed
    /// extent with the detector centered.
    pub fn parallel_beam(grid_n: usize, n_angles: usize, n_rays: usize) -> Result<Self> {
        if grid_n == 0 || n_angles == 0 || n_rays == 0 {
            return Err(Error::InvalidParameter(
                "tomography parameters must all be >= 1".into(),
            ));
        }
        let geom = TomoGeometry::new(grid_n, n_angles, n_rays);
        Ok(Operator {
            rows: n_rays * n_angles,
            cols: grid_n * grid_n,
            kind: Kind::Tomo(geom),
        })
    }

    /// Product operator x ↦ first(second(x)).
    pub fn composed(first: Operator, second: Operator) -> Result<Self> {
        if first.cols != second.rows {
            return Err(Error::DimensionMismatch {
                expected: first.cols,
                actual: second.rows,
            });
        }
        Ok(Operator {
            rows: first.rows,
            cols: second.cols,
            kind: Kind::Composed(Box::new(first), Box::new(second)),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    /// Computes A x.
    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: x.len(),
            });
        }
        Ok(match &self.kind {
            Kind::Dense(a) => a * x,
            Kind::Diagonal(d) => x.component_mul(d),
            Kind::Blur(k) => k.forward(x),
            Kind::Tomo(g) => g.forward(x),
            Kind::Composed(f, s) => f.apply(&s.apply(x)?)?,
        })
    }

    /// Computes Aᵀ y.
    pub fn apply_adjoint(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        if y.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                actual: y.len(),
            });
        }
        Ok(match &self.kind {
            Kind::Dense(a) => a.transpose() * y,
            Kind::Diagonal(d) => y.component_mul(d),
            Kind::Blur(k) => k.adjoint(y),
            Kind::Tomo(g) => g.adjoint(y),
            Kind::Composed(f, s) => s.apply_adjoint(&f.apply_adjoint(y)?)?,
        })
    }

    /// Assembles the operator densely by applying it to the canonical basis.
    /// Intended for oracle tests only; refuses problems past desk scale.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        if self.cols > 4096 {
            return Err(Error::InvalidParameter(format!(
                "dense assembly limited to 4096 unknowns, operator has {}",
                self.cols
            )));
        }
        let mut out = DMatrix::zeros(self.rows, self.cols);
        let mut e = DVector::zeros(self.cols);
        for j in 0..self.cols {
            e[j] = 1.0;
            let col = self.apply(&e)?;
            out.set_column(j, &col);
            e[j] = 0.0;
        }
        Ok(out)
    }
}

/// Max over seeded random trials of |⟨Ax,y⟩ − ⟨x,Aᵀy⟩| / (‖x‖‖y‖).
pub fn adjoint_consistency_check(op: &Operator, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials.max(1) {
        let x = standard_normal_vector(op.cols(), &mut rng);
        let y = standard_normal_vector(op.rows(), &mut rng);
        let ax = op.apply(&x).expect("dimensions fixed by construction");
        let aty = op
            .apply_adjoint(&y)
            .expect("dimensions fixed by construction");
        let gap = (ax.dot(&y) - x.dot(&aty)).abs() / (x.norm() * y.norm());
        worst = worst.max(gap);
    }
    worst
}

/// Seeded standard-normal vector (Box-Muller on the ChaCha stream so the
/// sequence is stable across platforms and rand versions).
pub fn standard_normal_vector<R: Rng>(len: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(len, |_, _| standard_normal(rng))
}

pub(crate) fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; u1 in (0,1] to avoid log(0).
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec(entries: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(entries)
    }

    #[test]
    fn dense_apply_diagonal_action() {
        let a = Operator::dense(DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]));
        let y = a.apply(&vec(&[1.0, 1.0])).unwrap();
        assert_eq!(y, vec(&[2.0, 1.0]));
        // symmetric matrix: adjoint acts identically
        let z = a.apply_adjoint(&vec(&[1.0, 1.0])).unwrap();
        assert_eq!(z, vec(&[2.0, 1.0]));
    }

    #[test]
    fn dense_adjoint_extracts_first_row() {
        let a = Operator::dense(DMatrix::from_row_slice(
            3,
            2,
            &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        ));
        let z = a.apply_adjoint(&vec(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!(z, vec(&[1.0, 2.0]));
    }

    #[test]
    fn diagonal_identity_case() {
        let d = Operator::diagonal(vec(&[1.0, 1.0, 1.0]));
        let y = d.apply(&vec(&[3.0, 4.0, 5.0])).unwrap();
        assert_eq!(y, vec(&[3.0, 4.0, 5.0]));
    }

    #[test]
    fn dimension_mismatch_is_reported_with_lengths() {
        let a = Operator::dense(DMatrix::zeros(3, 2));
        let err = a.apply(&vec(&[1.0, 2.0, 3.0])).unwrap_err();
        match err {
            Error::DimensionMismatch { expected, actual } => {
                assert_eq!((expected, actual), (2, 3));
            }
            other => panic!("unexpected error: {other}"),
        }
        let err = a.apply_adjoint(&vec(&[1.0, 2.0])).unwrap_err();
        match err {
            Error::DimensionMismatch { expected, actual } => {
                assert_eq!((expected, actual), (3, 2));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn delta_psf_blur_is_identity() {
        let b = Operator::gaussian_blur(4, 1.0, 0, Boundary::Zero).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let x = standard_normal_vector(16, &mut rng);
            let y = b.apply(&x).unwrap();
            assert!((y - &x).norm() <= 1e-14);
        }
    }

    #[test]
    fn blur_constant_image_leaks_mass_at_borders() {
        let side = 8;
        let b = Operator::gaussian_blur(side, 1.0, 2, Boundary::Zero).unwrap();
        let c = 0.7;
        let x = DVector::from_element(side * side, c);
        let y = b.apply(&x).unwrap();
        // interior pixels see the whole (unit-sum) kernel
        let idx = |r: usize, q: usize| q * side + r;
        for r in 2..side - 2 {
            for q in 2..side - 2 {
                assert!((y[idx(r, q)] - c).abs() <= 1e-12);
            }
        }
        // corner loses mass to the zero padding
        assert!(y[idx(0, 0)] < c - 1e-3);
    }

    #[test]
    fn blur_matches_dense_assembly_on_basis_vector() {
        let side = 8;
        let b = Operator::gaussian_blur(side, 1.0, 2, Boundary::Zero).unwrap();
        let dense = b.to_dense().unwrap();
        let mut e1 = DVector::zeros(side * side);
        e1[0] = 1.0;
        let via_op = b.apply(&e1).unwrap();
        let via_dense = &dense * &e1;
        assert!((via_op - via_dense).norm() <= 1e-14);
    }

    #[test]
    fn blur_rejects_nonpositive_sigma() {
        assert!(Operator::gaussian_blur(4, 0.0, 1, Boundary::Zero).is_err());
        assert!(Operator::gaussian_blur(4, -1.0, 1, Boundary::Zero).is_err());
    }

    #[test]
    fn blur_is_symmetric_as_a_matrix() {
        // zero padding plus an even kernel make the convolution matrix
        // symmetric, so forward and adjoint must agree on any vector
        let b = Operator::gaussian_blur(9, 1.7, 3, Boundary::Zero).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..5 {
            let x = standard_normal_vector(81, &mut rng);
            let fwd = b.apply(&x).unwrap();
            let adj = b.apply_adjoint(&x).unwrap();
            assert!((fwd - adj).norm() <= 1e-14);
        }
    }

    #[test]
    fn tomo_horizontal_ray_crosses_bottom_row() {
        // grid 2x2, one angle (0 degrees), two rays: offsets ±√2/2 from center,
        // so one ray crosses the bottom row of cells and one the top.
        let t = Operator::parallel_beam(2, 1, 2).unwrap();
        let x = DVector::from_element(4, 1.0);
        let y = t.apply(&x).unwrap();
        assert!((y[0] - 2.0).abs() <= 1e-12, "bottom ray sum {}", y[0]);
        assert!((y[1] - 2.0).abs() <= 1e-12, "top ray sum {}", y[1]);
    }

    #[test]
    fn tomo_zero_image_gives_zero_sinogram() {
        let t = Operator::parallel_beam(8, 4, 11).unwrap();
        let y = t.apply(&DVector::zeros(64)).unwrap();
        assert_eq!(y.norm(), 0.0);
    }

    #[test]
    fn tomo_adjoint_consistency() {
        let t = Operator::parallel_beam(8, 4, 11).unwrap();
        assert!(adjoint_consistency_check(&t, 20, 1) <= 1e-10);
    }

    #[test]
    fn tomo_adjoint_matches_dense_assembly() {
        let t = Operator::parallel_beam(8, 3, 11).unwrap();
        let dense = t.to_dense().unwrap();
        let mut e = DVector::zeros(t.rows());
        for j in [0usize, 7, 20] {
            e.fill(0.0);
            e[j] = 1.0;
            let via_op = t.apply_adjoint(&e).unwrap();
            let via_dense = dense.transpose() * &e;
            assert!((via_op - via_dense).norm() <= 1e-12);
        }
    }

    #[test]
    fn tomo_axis_aligned_rows_integrate_the_full_grid_width() {
        // at angle 0 every ray that crosses the grid interior accumulates
        // exactly grid_n of unit-cell intersection length
        let grid_n = 8;
        let n_rays = 13;
        let t = Operator::parallel_beam(grid_n, 4, n_rays).unwrap();
        let x = DVector::from_element(grid_n * grid_n, 1.0);
        let sino = t.apply(&x).unwrap();
        let extent = (grid_n as f64) * std::f64::consts::SQRT_2;
        let spacing = extent / n_rays as f64;
        for r in 0..n_rays {
            let offset = (r as f64 + 0.5 - n_rays as f64 / 2.0) * spacing;
            if offset.abs() < grid_n as f64 / 2.0 - 1e-9 {
                assert!(
                    (sino[r] - grid_n as f64).abs() <= 1e-12,
                    "ray {r} at offset {offset}: sum {}",
                    sino[r]
                );
            } else {
                assert!(sino[r] <= 1e-12, "ray {r} misses the grid");
            }
        }
    }

    #[test]
    fn tomo_rows_nonnegative_and_bounded_by_max_chord() {
        let grid_n = 8;
        let t = Operator::parallel_beam(grid_n, 6, 13).unwrap();
        if let Kind::Tomo(g) = t.kind() {
            let max_chord = (grid_n as f64) * std::f64::consts::SQRT_2;
            for row in g.rows() {
                let mut sum = 0.0;
                for &(_, w) in row {
                    assert!(w >= 0.0);
                    sum += w;
                }
                assert!(sum <= max_chord + 1e-9);
            }
        } else {
            unreachable!();
        }
    }

    #[test]
    fn consistency_check_identity_is_exact() {
        let id = Operator::identity(12);
        assert!(adjoint_consistency_check(&id, 5, 9) <= 1e-15);
    }

    #[test]
    fn consistency_check_dense_transpose_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = DMatrix::from_fn(20, 15, |_, _| standard_normal(&mut rng));
        let op = Operator::dense(a);
        assert!(adjoint_consistency_check(&op, 20, 2) <= 1e-12);
    }

    #[test]
    fn consistency_check_flags_wrong_adjoint() {
        // Compose a "broken" operator out of two mismatched dense blocks:
        // forward from A, adjoint from B. Build it by hand through Kind.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = DMatrix::from_fn(10, 8, |_, _| standard_normal(&mut rng));
        let b = DMatrix::from_fn(10, 8, |_, _| standard_normal(&mut rng));
        struct Mismatched {
            a: DMatrix<f64>,
            b: DMatrix<f64>,
        }
        impl Mismatched {
            fn check(&self, trials: usize, seed: u64) -> f64 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut worst = 0.0f64;
                for _ in 0..trials {
                    let x = standard_normal_vector(self.a.ncols(), &mut rng);
                    let y = standard_normal_vector(self.a.nrows(), &mut rng);
                    let gap = ((&self.a * &x).dot(&y) - x.dot(&(self.b.transpose() * &y))).abs()
                        / (x.norm() * y.norm());
                    worst = worst.max(gap);
                }
                worst
            }
        }
        let wrong = Mismatched { a, b };
        assert!(wrong.check(20, 3) > 1e-3, "negative control must trip");
    }

    #[test]
    fn constructor_validation() {
        assert!(Operator::parallel_beam(0, 4, 5).is_err());
        assert!(Operator::parallel_beam(4, 0, 5).is_err());
        assert!(Operator::parallel_beam(4, 4, 0).is_err());
        // composition requires matching inner dimensions
        let a = Operator::dense(DMatrix::zeros(3, 2));
        let b = Operator::dense(DMatrix::zeros(4, 3));
        assert!(Operator::composed(a.clone(), b.clone()).is_err());
        assert!(Operator::composed(b, a).is_ok());
    }

    #[test]
    fn composed_operator_chains_apply_and_adjoint() {
        let d = Operator::diagonal(vec(&[2.0, 3.0]));
        let a = Operator::dense(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]));
        let c = Operator::composed(a, d).unwrap();
        let y = c.apply(&vec(&[1.0, 1.0])).unwrap();
        assert_eq!(y, vec(&[5.0, 3.0]));
        assert!(adjoint_consistency_check(&c, 10, 4) <= 1e-14);
    }

    #[test]
    fn every_kind_passes_the_blanket_adjoint_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let ops = vec![
            Operator::dense(DMatrix::from_fn(17, 12, |_, _| standard_normal(&mut rng))),
            Operator::diagonal(standard_normal_vector(9, &mut rng)),
            Operator::gaussian_blur(8, 1.5, 3, Boundary::Zero).unwrap(),
            Operator::parallel_beam(8, 5, 11).unwrap(),
        ];
        for op in &ops {
            assert!(adjoint_consistency_check(op, 20, 7) <= 1e-10);
        }
    }
}

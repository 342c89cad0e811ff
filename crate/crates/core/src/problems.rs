//! Built-in test problems (deblurring, tomography), salt-and-pepper noise,
//! and evaluation metrics.
//!
//! Clean data is normalized to maximum value 1 before corruption, and the
//! ground truth is rescaled by the same factor so relative errors are
//! unaffected.

use crate::error::{Error, Result};
use crate::operators::{Boundary, Operator};
use nalgebra::DVector;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    SaltPepper,
    None,
}

#[derive(Debug, Clone)]
pub struct NoiseMeta {
    pub kind: NoiseKind,
    pub fraction: f64,
    pub seed: u64,
    /// Number of corrupted positions (exactly round(fraction·m)).
    pub corrupted: usize,
    /// Corrupted positions whose drawn value coincided with the clean value.
    pub collisions: usize,
}

/// A bundled inverse problem: operator, observed data, and (when known)
/// ground truth with its residual.
#[derive(Debug, Clone)]
pub struct Problem {
    pub op: Operator,
    pub b: DVector<f64>,
    pub x_true: Option<DVector<f64>>,
    pub r_true: Option<DVector<f64>>,
    pub noise: NoiseMeta,
}

/// Corrupts exactly round(fraction·m) distinct positions, each set to 0 or 1
/// with probability 1/2, using a seeded generator. The input is expected to
/// be normalized to [0, 1].
pub fn add_salt_pepper(b_clean: &DVector<f64>, fraction: f64, seed: u64) -> Result<DVector<f64>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidParameter(format!(
            "noise fraction must lie in [0, 1], got {fraction}"
        )));
    }
    let m = b_clean.len();
    let count = (fraction * m as f64).round() as usize;
    let mut out = b_clean.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (pos, val) in draw_corruptions(m, count, &mut rng) {
        out[pos] = val;
    }
    Ok(out)
}

/// Distinct positions via partial Fisher-Yates, then a fair 0/1 value each.
fn draw_corruptions<R: Rng>(m: usize, count: usize, rng: &mut R) -> Vec<(usize, f64)> {
    let mut idx: Vec<usize> = (0..m).collect();
    let count = count.min(m);
    let mut picks = Vec::with_capacity(count);
    for i in 0..count {
        let j = rng.gen_range(i..m);
        idx.swap(i, j);
        picks.push(idx[i]);
    }
    picks
        .into_iter()
        .map(|pos| (pos, if rng.gen::<bool>() { 1.0 } else { 0.0 }))
        .collect()
}

/// ‖x − x_true‖₂ / ‖x_true‖₂.
pub fn relative_error(x: &DVector<f64>, x_true: &DVector<f64>) -> Result<f64> {
    let denom = x_true.norm();
    if denom == 0.0 {
        return Err(Error::InvalidParameter(
            "relative error undefined for zero ground truth".into(),
        ));
    }
    Ok((x - x_true).norm() / denom)
}

/// Deterministic deblurring phantom: a bright diamond and bar with point
/// sources on a dark background, flattened column-major (row fastest).
pub fn deblur_phantom(side: usize) -> DVector<f64> {
    let s = side as f64;
    let mut img = DVector::zeros(side * side);
    let idx = |r: usize, c: usize| c * side + r;
    for r in 0..side {
        for c in 0..side {
            let (rf, cf) = (r as f64, c as f64);
            if (rf - 0.45 * s).abs() + (cf - 0.55 * s).abs() < 0.28 * s {
                img[idx(r, c)] = 0.7;
            }
        }
    }
    let r_lo = (0.15 * s) as usize;
    let r_hi = (0.25 * s) as usize;
    let c_lo = (0.2 * s) as usize;
    let c_hi = (0.8 * s) as usize;
    for r in r_lo..r_hi.min(side) {
        for c in c_lo..c_hi.min(side) {
            img[idx(r, c)] = 0.9;
        }
    }
    for (fr, fc) in [
        (0.2, 0.15),
        (0.8, 0.3),
        (0.75, 0.8),
        (0.3, 0.85),
        (0.6, 0.1),
    ] {
        let r = ((fr * s) as usize).min(side - 1);
        let c = ((fc * s) as usize).min(side - 1);
        img[idx(r, c)] = 1.0;
    }
    img
}

/// Piecewise-constant Shepp-Logan-style head phantom on an N×N grid,
/// clipped to nonnegative values, flattened as cell (ix, iy) → ix·N + iy.
pub fn shepp_logan_phantom(n: usize) -> DVector<f64> {
    // (intensity, a, b, x0, y0, phi in degrees)
    const ELLIPSES: [(f64, f64, f64, f64, f64, f64); 10] = [
        (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
        (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
        (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
        (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
        (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
        (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
        (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
        (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
        (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
        (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
    ];
    let mut img = DVector::zeros(n * n);
    for ix in 0..n {
        for iy in 0..n {
            let x = -1.0 + 2.0 * (ix as f64 + 0.5) / n as f64;
            let y = -1.0 + 2.0 * (iy as f64 + 0.5) / n as f64;
            let mut v = 0.0;
            for &(a_int, a, b, x0, y0, phi) in &ELLIPSES {
                let th = phi.to_radians();
                let xr = (x - x0) * th.cos() + (y - y0) * th.sin();
                let yr = -(x - x0) * th.sin() + (y - y0) * th.cos();
                if (xr / a).powi(2) + (yr / b).powi(2) <= 1.0 {
                    v += a_int;
                }
            }
            img[ix * n + iy] = v.max(0.0);
        }
    }
    img
}

/// Builds a deblurring problem: blurred phantom, normalized to max 1, then
/// salt-and-pepper corrupted.
pub fn make_deblur_problem(
    side: usize,
    psf_sigma: f64,
    psf_halfwidth: usize,
    noise_fraction: f64,
    seed: u64,
) -> Result<Problem> {
    let op = Operator::gaussian_blur(side, psf_sigma, psf_halfwidth, Boundary::Zero)?;
    let phantom = deblur_phantom(side);
    assemble_problem(op, phantom, noise_fraction, seed)
}

/// Deblurring problem with a caller-supplied ground-truth image.
pub fn make_deblur_problem_with_truth(
    side: usize,
    psf_sigma: f64,
    psf_halfwidth: usize,
    noise_fraction: f64,
    seed: u64,
    x_true: DVector<f64>,
) -> Result<Problem> {
    let op = Operator::gaussian_blur(side, psf_sigma, psf_halfwidth, Boundary::Zero)?;
    if x_true.len() != op.cols() {
        return Err(Error::DimensionMismatch {
            expected: op.cols(),
            actual: x_true.len(),
        });
    }
    assemble_problem(op, x_true, noise_fraction, seed)
}

/// Builds a parallel-beam tomography problem from the Shepp-Logan phantom.
pub fn make_tomo_problem(
    grid_n: usize,
    n_angles: usize,
    n_rays: usize,
    noise_fraction: f64,
    seed: u64,
) -> Result<Problem> {
    let op = Operator::parallel_beam(grid_n, n_angles, n_rays)?;
    let phantom = shepp_logan_phantom(grid_n);
    assemble_problem(op, phantom, noise_fraction, seed)
}

fn assemble_problem(
    op: Operator,
    phantom: DVector<f64>,
    noise_fraction: f64,
    seed: u64,
) -> Result<Problem> {
    let b_raw = op.apply(&phantom)?;
    let scale = b_raw.max();
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let x_true = phantom / scale;
    let b_clean = b_raw / scale;
    let b = add_salt_pepper(&b_clean, noise_fraction, seed)?;
    let count = (noise_fraction * b_clean.len() as f64).round() as usize;
    let collisions = b
        .iter()
        .zip(b_clean.iter())
        .filter(|(bi, ci)| bi == ci)
        .count()
        .saturating_sub(b_clean.len() - count.min(b_clean.len()));
    let r_true = &b - &b_clean;
    Ok(Problem {
        op,
        b,
        x_true: Some(x_true),
        r_true: Some(r_true),
        noise: NoiseMeta {
            kind: if noise_fraction > 0.0 {
                NoiseKind::SaltPepper
            } else {
                NoiseKind::None
            },
            fraction: noise_fraction,
            seed,
            corrupted: count,
            collisions,
        },
    })
}

//! Parallel-beam tomography rows via Siddon-style grid traversal.
//!
//! The image occupies [0, N]² with unit cells; cell (ix, iy) maps to flat
//! index ix·N + iy. Rays for angle θ travel along (cos θ, sin θ) and are
//! offset from the grid center along (−sin θ, cos θ). Detector offsets are
//! centered and span the circumscribed extent √2·N.

use nalgebra::DVector;

#[derive(Debug, Clone)]
pub struct TomoGeometry {
    grid_n: usize,
    n_angles: usize,
    n_rays: usize,
    /// Sparse rows: (cell index, intersection length).
    rows: Vec<Vec<(usize, f64)>>,
}

impl TomoGeometry {
    pub fn new(grid_n: usize, n_angles: usize, n_rays: usize) -> Self {
        let mut rows = Vec::with_capacity(n_angles * n_rays);
        let extent = (grid_n as f64) * std::f64::consts::SQRT_2;
        let spacing = extent / n_rays as f64;
        let center = grid_n as f64 / 2.0;
        for a in 0..n_angles {
            let theta = std::f64::consts::PI * (a as f64) / (n_angles as f64);
            let dir = (theta.cos(), theta.sin());
            let perp = (-theta.sin(), theta.cos());
            for r in 0..n_rays {
                let t = (r as f64 + 0.5 - n_rays as f64 / 2.0) * spacing;
                // A point far behind the grid on this ray.
                let p0 = (
                    center + t * perp.0 - dir.0 * 2.0 * grid_n as f64,
                    center + t * perp.1 - dir.1 * 2.0 * grid_n as f64,
                );
                rows.push(trace_ray(p0, dir, grid_n));
            }
        }
        TomoGeometry {
            grid_n,
            n_angles,
            n_rays,
            rows,
        }
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    pub fn n_angles(&self) -> usize {
        self.n_angles
    }

    pub fn n_rays(&self) -> usize {
        self.n_rays
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn forward(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc = 0.0;
            for &(j, w) in row {
                acc += w * x[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.grid_n * self.grid_n);
        for (i, row) in self.rows.iter().enumerate() {
            let yi = y[i];
            for &(j, w) in row {
                out[j] += w * yi;
            }
        }
        out
    }
}

/// March the ray p(t) = p0 + t·dir through the unit-cell grid [0,N]²,
/// recording (cell, length) for every traversed cell.
fn trace_ray(p0: (f64, f64), dir: (f64, f64), grid_n: usize) -> Vec<(usize, f64)> {
    const EPS: f64 = 1e-12;
    let nf = grid_n as f64;
    // Clip the ray against the bounding box.
    let mut t_min = 0.0f64;
    let mut t_max = 4.0 * nf;
    for (p, d) in [(p0.0, dir.0), (p0.1, dir.1)] {
        if d.abs() < EPS {
            if p <= 0.0 || p >= nf {
                return Vec::new();
            }
        } else {
            let t0 = (0.0 - p) / d;
            let t1 = (nf - p) / d;
            t_min = t_min.max(t0.min(t1));
            t_max = t_max.min(t0.max(t1));
        }
    }
    if t_max <= t_min + EPS {
        return Vec::new();
    }
    let mut entries = Vec::new();
    let mut t_cur = t_min;
    while t_cur < t_max - EPS {
        // Next axis crossing strictly after t_cur.
        let mut t_next = t_max;
        let pos = (p0.0 + (t_cur + 1e-9) * dir.0, p0.1 + (t_cur + 1e-9) * dir.1);
        for (p, d, start) in [(p0.0, dir.0, pos.0), (p0.1, dir.1, pos.1)] {
            if d.abs() < EPS {
                continue;
            }
            let boundary = if d > 0.0 {
                start.floor() + 1.0
            } else {
                start.floor()
            };
            let tc = (boundary - p) / d;
            if tc > t_cur + EPS {
                t_next = t_next.min(tc);
            }
        }
        t_next = t_next.min(t_max);
        let mid = (
            p0.0 + 0.5 * (t_cur + t_next) * dir.0,
            p0.1 + 0.5 * (t_cur + t_next) * dir.1,
        );
        let ix = mid.0.floor() as isize;
        let iy = mid.1.floor() as isize;
        if ix >= 0 && (ix as usize) < grid_n && iy >= 0 && (iy as usize) < grid_n {
            let len = t_next - t_cur;
            if len > EPS {
                entries.push((ix as usize * grid_n + iy as usize, len));
            }
        }
        t_cur = t_next;
    }
    entries
}

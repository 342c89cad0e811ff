//! Truncated-Gaussian 2-D convolution with zero padding.

use nalgebra::DVector;

/// Precomputed PSF stencil for a `side × side` image.
#[derive(Debug, Clone)]
pub struct BlurKernel {
    side: usize,
    halfwidth: usize,
    /// (2h+1)² stencil weights, row-major over (di, dj), unit sum.
    weights: Vec<f64>,
}

impl BlurKernel {
    pub fn new(side: usize, sigma: f64, halfwidth: usize) -> Self {
        let h = halfwidth as isize;
        let w = 2 * halfwidth + 1;
        let mut weights = vec![0.0; w * w];
        let mut sum = 0.0;
        for di in -h..=h {
            for dj in -h..=h {
                let v = (-((di * di + dj * dj) as f64) / (2.0 * sigma * sigma)).exp();
                weights[((di + h) as usize) * w + (dj + h) as usize] = v;
                sum += v;
            }
        }
        for v in &mut weights {
            *v /= sum;
        }
        BlurKernel {
            side,
            halfwidth,
            weights,
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn halfwidth(&self) -> usize {
        self.halfwidth
    }

    /// Stencil weight at offset (di, dj), |di|,|dj| ≤ halfwidth.
    pub fn weight(&self, di: isize, dj: isize) -> f64 {
        let h = self.halfwidth as isize;
        let w = 2 * self.halfwidth + 1;
        self.weights[((di + h) as usize) * w + (dj + h) as usize]
    }

    /// out(r,c) = Σ k(dr,dc) · x(r+dr, c+dc), zero outside the image.
    pub fn forward(&self, x: &DVector<f64>) -> DVector<f64> {
        self.correlate(x, false)
    }

    /// Adjoint of `forward`: correlation with the flipped stencil.
    pub fn adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        self.correlate(y, true)
    }

    fn correlate(&self, x: &DVector<f64>, flip: bool) -> DVector<f64> {
        let n = self.side as isize;
        let h = self.halfwidth as isize;
        let mut out = DVector::zeros(self.side * self.side);
        for c in 0..n {
            for r in 0..n {
                let mut acc = 0.0;
                for dr in -h..=h {
                    let rr = r + dr;
                    if rr < 0 || rr >= n {
                        continue;
                    }
                    for dc in -h..=h {
                        let cc = c + dc;
                        if cc < 0 || cc >= n {
                            continue;
                        }
                        let w = if flip {
                            self.weight(-dr, -dc)
                        } else {
                            self.weight(dr, dc)
                        };
                        acc += w * x[(cc * n + rr) as usize];
                    }
                }
                out[(c * n + r) as usize] = acc;
            }
        }
        out
    }
}

//! Periodic forward differences on the mode-1 unfolding, isotropic TV and the
//! DFT solve of `(beta2 I + beta3 (D1^T D1 + D2^T D2)) Z = B`.
//!
//! `D1` differences along columns (`X(m, n+1) - X(m, n)`), `D2` along rows
//! (`X(m+1, n) - X(m, n)`), both wrapping around.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::matrix::RbMatrix;
use crate::tensor::RbTensor;

/// Mode-1 unfolding `X_(1)`, an `I1 x t` matrix. Column-major storage makes
/// this a plain reinterpretation of the tensor data.
pub fn mode1(t: &RbTensor) -> RbMatrix {
    let rows = t.dims()[0];
    RbMatrix::from_column_major(rows, t.len() / rows, t.c1().to_vec(), t.c2().to_vec())
}

/// Inverse of [`mode1`].
pub fn from_mode1(m: RbMatrix, dims: &[usize]) -> RbTensor {
    let (c1, c2) = m.into_column_major();
    RbTensor::from_channels(dims, c1, c2).expect("mode-1 unfolding has the tensor's size")
}

fn map_channels(x: &RbMatrix, f: impl Fn(&[Complex64], usize, usize) -> Vec<Complex64>) -> RbMatrix {
    let (rows, cols) = x.shape();
    let c1 = f(x.c1().as_slice(), rows, cols);
    let c2 = f(x.c2().as_slice(), rows, cols);
    RbMatrix::from_column_major(rows, cols, c1, c2)
}

fn shifted(data: &[Complex64], rows: usize, cols: usize, dm: usize, dn: usize, forward: bool) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(data.len());
    for n in 0..cols {
        for m in 0..rows {
            let here = data[m + n * rows];
            if forward {
                out.push(data[(m + dm) % rows + ((n + dn) % cols) * rows] - here);
            } else {
                out.push(data[(m + rows - dm) % rows + ((n + cols - dn) % cols) * rows] - here);
            }
        }
    }
    out
}

pub fn d1(x: &RbMatrix) -> RbMatrix {
    map_channels(x, |d, r, c| shifted(d, r, c, 0, 1, true))
}

pub fn d2(x: &RbMatrix) -> RbMatrix {
    map_channels(x, |d, r, c| shifted(d, r, c, 1, 0, true))
}

/// `D1^T y`: `y(m, n-1) - y(m, n)`.
pub fn d1t(y: &RbMatrix) -> RbMatrix {
    map_channels(y, |d, r, c| shifted(d, r, c, 0, 1, false))
}

/// `D2^T y`: `y(m-1, n) - y(m, n)`.
pub fn d2t(y: &RbMatrix) -> RbMatrix {
    map_channels(y, |d, r, c| shifted(d, r, c, 1, 0, false))
}

/// `sum_{m,n} sqrt(|D1 X(m,n)|^2 + |D2 X(m,n)|^2)` on the mode-1 unfolding.
pub fn tv_value(x: &RbTensor) -> f64 {
    let m = mode1(x);
    tv_of_gradients(&d1(&m), &d2(&m))
}

pub(crate) fn tv_of_gradients(g1: &RbMatrix, g2: &RbMatrix) -> f64 {
    let (rows, cols) = g1.shape();
    let mut total = 0.0;
    for n in 0..cols {
        for m in 0..rows {
            total += (g1.get(m, n).norm_sqr() + g2.get(m, n).norm_sqr()).sqrt();
        }
    }
    total
}

/// Eigenvalues of `beta2 I + beta3 (D1^T D1 + D2^T D2)` under the 2-D DFT,
/// column-major over `(u, v)` with `u` the row frequency.
pub fn gradient_spectrum(rows: usize, cols: usize, beta2: f64, beta3: f64) -> Vec<f64> {
    let axis = |f: usize, len: usize| {
        let w = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f as f64 / len as f64);
        (Complex64::new(1.0, 0.0) - w).norm_sqr()
    };
    let mut out = Vec::with_capacity(rows * cols);
    for v in 0..cols {
        for u in 0..rows {
            out.push(beta2 + beta3 * (axis(u, rows) + axis(v, cols)));
        }
    }
    out
}

/// Applies `beta2 Z + beta3 (D1^T D1 Z + D2^T D2 Z)` directly.
pub fn apply_operator(z: &RbMatrix, beta2: f64, beta3: f64) -> RbMatrix {
    let lap = &d1t(&d1(z)) + &d2t(&d2(z));
    &z.scale(beta2) + &lap.scale(beta3)
}

/// Cached FFT plans and spectrum for one unfolding shape.
pub struct SpectralSolver {
    rows: usize,
    cols: usize,
    spectrum: Vec<f64>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
}

impl SpectralSolver {
    pub fn new(rows: usize, cols: usize, beta2: f64, beta3: f64) -> Self {
        let mut planner = FftPlanner::new();
        SpectralSolver {
            rows,
            cols,
            spectrum: gradient_spectrum(rows, cols, beta2, beta3),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
        }
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    fn fft2(&self, data: &mut [Complex64], col: &Arc<dyn Fft<f64>>, row: &Arc<dyn Fft<f64>>) {
        // columns are contiguous; rows are gathered into a buffer
        col.process(data);
        let mut buf = vec![Complex64::default(); self.cols];
        for m in 0..self.rows {
            for n in 0..self.cols {
                buf[n] = data[m + n * self.rows];
            }
            row.process(&mut buf);
            for n in 0..self.cols {
                data[m + n * self.rows] = buf[n];
            }
        }
    }

    fn solve_channel(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut data = b.to_vec();
        self.fft2(&mut data, &self.col_fwd, &self.row_fwd);
        let norm = (self.rows * self.cols) as f64;
        for (z, s) in data.iter_mut().zip(&self.spectrum) {
            *z /= s * norm;
        }
        self.fft2(&mut data, &self.col_inv, &self.row_inv);
        data
    }

    /// `Z = F^{-1}(F(B) / spectrum)`, channel by channel.
    pub fn solve(&self, b: &RbMatrix) -> RbMatrix {
        assert_eq!(b.shape(), (self.rows, self.cols), "right-hand side shape");
        let (c1, c2) = rayon::join(|| self.solve_channel(b.c1().as_slice()), || self.solve_channel(b.c2().as_slice()));
        RbMatrix::from_column_major(self.rows, self.cols, c1, c2)
    }
}

/// Per-pixel group shrinkage of the pair `(w1(m,n), w2(m,n))`.
pub fn shrink_pairs(w1: &RbMatrix, w2: &RbMatrix, lambda: f64, beta: f64) -> (RbMatrix, RbMatrix) {
    let (rows, cols) = w1.shape();
    let mut e1 = RbMatrix::zeros(rows, cols);
    let mut e2 = RbMatrix::zeros(rows, cols);
    for n in 0..cols {
        for m in 0..rows {
            let pair = [w1.get(m, n), w2.get(m, n)];
            let s = crate::matrix::group_shrink(&pair, lambda, beta);
            e1.set(m, n, s[0]);
            e2.set(m, n, s[1]);
        }
    }
    (e1, e2)
}

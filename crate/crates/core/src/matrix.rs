//! Dense RB matrices `Q = Q_c1 e1 + Q_c2 e2`.
//!
//! Products and conjugate transposes act channel by channel. The RBSVD is the
//! pair of complex SVDs of the two channels, with the singular values of both
//! channels kept in their own descending order and paired by index.

use std::ops::{Add, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Channel, RbError, Result};
use crate::scalar::RbScalar;
use crate::svd::{assemble, complex_svd, CMatrix, ComplexSvd};

/// Relative tolerance used by [`RbMatrix::rank`] when no explicit one is given.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct RbMatrix {
    c1: CMatrix,
    c2: CMatrix,
}

/// Factors of `Q = U diag(sigma1 e1 + sigma2 e2) V^H`.
#[derive(Debug, Clone)]
pub struct RbSvd {
    pub u: RbMatrix,
    pub sigma1: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub v: RbMatrix,
}

impl RbSvd {
    /// RB singular-value moduli `sqrt((sigma1_i^2 + sigma2_i^2) / 2)`.
    pub fn moduli(&self) -> Vec<f64> {
        self.sigma1
            .iter()
            .zip(&self.sigma2)
            .map(|(a, b)| (0.5 * (a * a + b * b)).sqrt())
            .collect()
    }

    pub fn sigma(&self, i: usize) -> RbScalar {
        RbScalar::new(Complex64::new(self.sigma1[i], 0.0), Complex64::new(self.sigma2[i], 0.0))
    }

    /// Keeps the leading `r` triplets in both channels.
    pub fn truncate(&mut self, r: usize) {
        let r = r.min(self.sigma1.len());
        self.sigma1.truncate(r);
        self.sigma2.truncate(r);
        self.u = self.u.columns(0, r);
        self.v = self.v.columns(0, r);
    }

    /// `U diag(Sigma) V^H`.
    pub fn reconstruct(&self) -> RbMatrix {
        RbMatrix {
            c1: assemble(&self.u.c1, &self.sigma1, &self.v.c1),
            c2: assemble(&self.u.c2, &self.sigma2, &self.v.c2),
        }
    }

    /// `diag(Sigma) V^H`, the right factor used by the tensor-ring sweep.
    pub fn sigma_vh(&self) -> RbMatrix {
        let scale = |v: &CMatrix, s: &[f64]| {
            let mut vh = v.adjoint();
            for (i, &x) in s.iter().enumerate() {
                vh.row_mut(i).scale_mut(x);
            }
            vh
        };
        RbMatrix { c1: scale(&self.v.c1, &self.sigma1), c2: scale(&self.v.c2, &self.sigma2) }
    }
}

impl RbMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RbMatrix { c1: CMatrix::zeros(rows, cols), c2: CMatrix::zeros(rows, cols) }
    }

    pub fn identity(n: usize) -> Self {
        RbMatrix { c1: CMatrix::identity(n, n), c2: CMatrix::identity(n, n) }
    }

    pub fn from_channels(c1: CMatrix, c2: CMatrix) -> Result<Self> {
        if c1.shape() != c2.shape() {
            return Err(RbError::dim(format!(
                "channel shapes differ: {:?} vs {:?}",
                c1.shape(),
                c2.shape()
            )));
        }
        Ok(RbMatrix { c1, c2 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> RbScalar) -> Self {
        let mut m = RbMatrix::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Column-major data for both channels; `data.len()` must be `rows * cols`.
    pub(crate) fn from_column_major(rows: usize, cols: usize, c1: Vec<Complex64>, c2: Vec<Complex64>) -> Self {
        RbMatrix {
            c1: CMatrix::from_vec(rows, cols, c1),
            c2: CMatrix::from_vec(rows, cols, c2),
        }
    }

    pub(crate) fn into_column_major(self) -> (Vec<Complex64>, Vec<Complex64>) {
        (self.c1.data.into(), self.c2.data.into())
    }

    /// Uniform coefficients in `[-1, 1]`.
    pub fn random(rows: usize, cols: usize, rng: &mut impl rand::Rng) -> Self {
        RbMatrix::from_fn(rows, cols, |_, _| {
            RbScalar::from_coeffs(
                rng.random_range(-1.0..=1.0),
                rng.random_range(-1.0..=1.0),
                rng.random_range(-1.0..=1.0),
                rng.random_range(-1.0..=1.0),
            )
        })
    }

    pub fn from_diag(d: &[RbScalar]) -> Self {
        let n = d.len();
        RbMatrix::from_fn(n, n, |i, j| if i == j { d[i] } else { RbScalar::ZERO })
    }

    pub fn rows(&self) -> usize {
        self.c1.nrows()
    }

    pub fn cols(&self) -> usize {
        self.c1.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.c1.shape()
    }

    pub fn c1(&self) -> &CMatrix {
        &self.c1
    }

    pub fn c2(&self) -> &CMatrix {
        &self.c2
    }

    pub fn get(&self, i: usize, j: usize) -> RbScalar {
        RbScalar::new(self.c1[(i, j)], self.c2[(i, j)])
    }

    pub fn set(&mut self, i: usize, j: usize, v: RbScalar) {
        self.c1[(i, j)] = v.c1;
        self.c2[(i, j)] = v.c2;
    }

    pub fn columns(&self, start: usize, n: usize) -> RbMatrix {
        RbMatrix {
            c1: self.c1.columns(start, n).into_owned(),
            c2: self.c2.columns(start, n).into_owned(),
        }
    }

    pub fn matmul(&self, rhs: &RbMatrix) -> Result<RbMatrix> {
        if self.cols() != rhs.rows() {
            return Err(RbError::dim(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                rhs.shape()
            )));
        }
        Ok(RbMatrix { c1: &self.c1 * &rhs.c1, c2: &self.c2 * &rhs.c2 })
    }

    pub fn conj_transpose(&self) -> RbMatrix {
        RbMatrix { c1: self.c1.adjoint(), c2: self.c2.adjoint() }
    }

    /// Plain transpose without conjugation.
    pub fn transpose(&self) -> RbMatrix {
        RbMatrix { c1: self.c1.transpose(), c2: self.c2.transpose() }
    }

    pub fn scale(&self, s: f64) -> RbMatrix {
        RbMatrix { c1: &self.c1 * Complex64::new(s, 0.0), c2: &self.c2 * Complex64::new(s, 0.0) }
    }

    /// `sqrt(sum |q_ij|^2) = sqrt((||c1||_F^2 + ||c2||_F^2) / 2)`.
    pub fn frobenius(&self) -> f64 {
        (0.5 * (self.c1.norm_squared() + self.c2.norm_squared())).sqrt()
    }

    pub fn trace(&self) -> RbScalar {
        RbScalar::new(self.c1.trace(), self.c2.trace())
    }

    /// Channel-wise complex SVDs assembled into `U e1/e2`, `V e1/e2`.
    pub fn rbsvd(&self) -> Result<RbSvd> {
        let (s1, s2) = rayon::join(|| complex_svd(&self.c1), || complex_svd(&self.c2));
        let s1 = s1.ok_or(RbError::SvdNonConvergence(Channel::E1))?;
        let s2 = s2.ok_or(RbError::SvdNonConvergence(Channel::E2))?;
        let ComplexSvd { u: u1, sigma: sigma1, v: v1 } = s1;
        let ComplexSvd { u: u2, sigma: sigma2, v: v2 } = s2;
        Ok(RbSvd {
            u: RbMatrix { c1: u1, c2: u2 },
            sigma1,
            sigma2,
            v: RbMatrix { c1: v1, c2: v2 },
        })
    }

    /// Number of RB singular values whose modulus exceeds `tol` times the largest.
    pub fn rank(&self, tol: f64) -> Result<usize> {
        let moduli = self.rbsvd()?.moduli();
        let max = moduli.first().copied().unwrap_or(0.0);
        if max == 0.0 {
            return Ok(0);
        }
        Ok(moduli.iter().filter(|&&m| m > tol * max).count())
    }

    /// Sum of RB singular-value moduli.
    pub fn nuclear_norm(&self) -> Result<f64> {
        Ok(self.rbsvd()?.moduli().iter().sum())
    }

    /// Singular-value soft thresholding, applied to each channel's singular
    /// values independently.
    pub fn svt(&self, tau: f64) -> Result<RbMatrix> {
        if tau.is_nan() || tau < 0.0 {
            return Err(RbError::arg(format!("threshold must be nonnegative, got {tau}")));
        }
        let mut svd = self.rbsvd()?;
        for s in svd.sigma1.iter_mut().chain(svd.sigma2.iter_mut()) {
            *s = (*s - tau).max(0.0);
        }
        Ok(svd.reconstruct())
    }

    /// Blockwise real representation of size `4M x 4N`.
    pub fn real_rep(&self) -> DMatrix<f64> {
        let (m, n) = self.shape();
        let mut out = DMatrix::zeros(4 * m, 4 * n);
        for j in 0..n {
            for i in 0..m {
                let r = self.get(i, j).real_rep();
                for bi in 0..4 {
                    for bj in 0..4 {
                        out[(bi * m + i, bj * n + j)] = r[(bi, bj)];
                    }
                }
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.c1.iter().chain(self.c2.iter()).all(|z| z.is_finite())
    }
}

impl Add for &RbMatrix {
    type Output = RbMatrix;
    fn add(self, rhs: &RbMatrix) -> RbMatrix {
        RbMatrix { c1: &self.c1 + &rhs.c1, c2: &self.c2 + &rhs.c2 }
    }
}

impl Sub for &RbMatrix {
    type Output = RbMatrix;
    fn sub(self, rhs: &RbMatrix) -> RbMatrix {
        RbMatrix { c1: &self.c1 - &rhs.c1, c2: &self.c2 - &rhs.c2 }
    }
}

/// `||x||_2` for an RB vector.
pub fn vec_norm(x: &[RbScalar]) -> f64 {
    x.iter().map(RbScalar::norm_sqr).sum::<f64>().sqrt()
}

/// `Re(x^H y)`, the real part of the RB inner product.
pub fn re_inner(x: &[RbScalar], y: &[RbScalar]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a.conj() * *b).re()).sum()
}

/// Closed-form minimiser of `(beta/2)||x - y||^2 + lambda ||x||` over RB
/// vectors: `max(||y|| - lambda/beta, 0) y / ||y||`.
pub fn group_shrink(y: &[RbScalar], lambda: f64, beta: f64) -> Vec<RbScalar> {
    let norm = vec_norm(y);
    let kept = norm - lambda / beta;
    if norm == 0.0 || kept <= 0.0 {
        return vec![RbScalar::ZERO; y.len()];
    }
    let s = kept / norm;
    y.iter().map(|v| v.scale(s)).collect()
}

//! Economy complex SVD used by both channels of the RBSVD, backed by faer.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// `m = u * diag(sigma) * v^H` with `u: M x r`, `v: N x r`, `r = min(M, N)`
/// and `sigma` sorted in descending order.
#[derive(Debug, Clone)]
pub struct ComplexSvd {
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    pub v: CMatrix,
}

impl ComplexSvd {
    pub fn rank_cap(&self) -> usize {
        self.sigma.len()
    }

    /// Keeps the leading `r` triplets.
    pub fn truncate(&mut self, r: usize) {
        let r = r.min(self.sigma.len());
        self.sigma.truncate(r);
        self.u = self.u.columns(0, r).into_owned();
        self.v = self.v.columns(0, r).into_owned();
    }
}

/// Returns `None` when the backend fails to converge.
pub fn complex_svd(m: &CMatrix) -> Option<ComplexSvd> {
    let (rows, cols) = m.shape();
    let r = rows.min(cols);
    if r == 0 {
        return Some(ComplexSvd {
            u: CMatrix::zeros(rows, 0),
            sigma: Vec::new(),
            v: CMatrix::zeros(cols, 0),
        });
    }
    let a = faer::Mat::<Complex64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let svd = a.thin_svd().ok()?;
    let (fu, fv, fs) = (svd.U(), svd.V(), svd.S().column_vector());
    let u = CMatrix::from_fn(rows, r, |i, j| fu[(i, j)]);
    let v = CMatrix::from_fn(cols, r, |i, j| fv[(i, j)]);
    let sigma: Vec<f64> = (0..r).map(|i| fs[i].re).collect();
    if sigma.iter().any(|s| !s.is_finite()) {
        return None;
    }
    Some(ComplexSvd { u, sigma, v })
}

/// `u * diag(sigma) * v^H` restricted to the strictly positive entries of `sigma`.
pub fn assemble(u: &CMatrix, sigma: &[f64], v: &CMatrix) -> CMatrix {
    let keep = sigma.iter().take_while(|&&s| s > 0.0).count();
    let mut us = u.columns(0, keep).into_owned();
    for (j, &s) in sigma.iter().take(keep).enumerate() {
        us.column_mut(j).scale_mut(s);
    }
    us * v.columns(0, keep).adjoint()
}

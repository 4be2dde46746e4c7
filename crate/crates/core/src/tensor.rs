//! Dense N-th order RB tensors.
//!
//! Storage is column-major (first index fastest): entry `(i_1, ..., i_N)`
//! lives at `i_1 + i_2 I_1 + ... + i_N I_1 ... I_{N-1}` with 0-based element
//! indices. Mode numbers `k` and circular offsets `d` passed to the unfolding
//! routines are 1-based, as in the usual mode-k notation.
//!
//! All unfoldings are expressed as "permute, then reshape": a choice of row
//! modes and column modes, each group linearised first-index-fastest.

use std::ops::{Add, Sub};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{RbError, Result};
use crate::matrix::RbMatrix;
use crate::scalar::RbScalar;

#[derive(Debug, Clone, PartialEq)]
pub struct RbTensor {
    dims: Vec<usize>,
    c1: Vec<Complex64>,
    c2: Vec<Complex64>,
}

/// Observed-entry set `Omega` over a tensor's linear indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMask {
    dims: Vec<usize>,
    observed: Vec<bool>,
}

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = Vec::with_capacity(dims.len());
    let mut acc = 1;
    for &d in dims {
        s.push(acc);
        acc *= d;
    }
    s
}

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(RbError::dim(format!("tensor dimensions must be positive and nonempty, got {dims:?}")));
    }
    Ok(dims.iter().product())
}

fn permute_data(data: &[Complex64], dims: &[usize], order: &[usize]) -> Vec<Complex64> {
    let n = dims.len();
    let in_strides = strides(dims);
    let new_dims: Vec<usize> = order.iter().map(|&o| dims[o]).collect();
    let step: Vec<usize> = order.iter().map(|&o| in_strides[o]).collect();
    let mut out = Vec::with_capacity(data.len());
    let mut idx = vec![0usize; n];
    let mut off = 0usize;
    for _ in 0..data.len() {
        out.push(data[off]);
        for d in 0..n {
            idx[d] += 1;
            off += step[d];
            if idx[d] < new_dims[d] {
                break;
            }
            off -= step[d] * new_dims[d];
            idx[d] = 0;
        }
    }
    out
}

fn is_permutation(order: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    order.len() == n
        && order.iter().all(|&o| {
            if o >= n || seen[o] {
                return false;
            }
            seen[o] = true;
            true
        })
}

/// Row and column mode groups (0-based) of the classical mode-k unfolding.
fn classical_modes(n: usize, k: usize) -> (Vec<usize>, Vec<usize>) {
    (vec![k - 1], (0..n).filter(|&l| l != k - 1).collect())
}

/// Mode-k unfolding: columns run cyclically from mode k+1.
fn mode_modes(n: usize, k: usize) -> (Vec<usize>, Vec<usize>) {
    (vec![k - 1], (1..n).map(|s| (k - 1 + s) % n).collect())
}

fn kmode_modes(n: usize, k: usize) -> (Vec<usize>, Vec<usize>) {
    ((0..k).collect(), (k..n).collect())
}

/// Rows `i_m .. i_k` (cyclic, `d` modes), columns `i_{k+1} .. i_{m-1}`.
fn circular_modes(n: usize, k: usize, d: usize) -> (Vec<usize>, Vec<usize>) {
    let m0 = (k + n - d) % n; // 0-based m
    let rows = (0..d).map(|s| (m0 + s) % n).collect();
    let cols = (0..n - d).map(|s| (k + s) % n).collect();
    (rows, cols)
}

/// First row mode `m` (1-based) of the circular unfolding `X_<k,d>`.
pub fn circular_start(n: usize, k: usize, d: usize) -> usize {
    if d <= k {
        k - d + 1
    } else {
        k + n + 1 - d
    }
}

impl RbTensor {
    pub fn zeros(dims: &[usize]) -> Self {
        let len: usize = dims.iter().product();
        RbTensor { dims: dims.to_vec(), c1: vec![Complex64::default(); len], c2: vec![Complex64::default(); len] }
    }

    pub fn from_channels(dims: &[usize], c1: Vec<Complex64>, c2: Vec<Complex64>) -> Result<Self> {
        let len = check_dims(dims)?;
        if c1.len() != len || c2.len() != len {
            return Err(RbError::dim(format!(
                "channel lengths {} / {} do not match dims {dims:?}",
                c1.len(),
                c2.len()
            )));
        }
        Ok(RbTensor { dims: dims.to_vec(), c1, c2 })
    }

    /// `f` receives 0-based multi-indices in storage order.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> RbScalar) -> Self {
        let mut t = RbTensor::zeros(dims);
        let mut idx = vec![0usize; dims.len()];
        for lin in 0..t.len() {
            t.set_linear(lin, f(&idx));
            for d in 0..dims.len() {
                idx[d] += 1;
                if idx[d] < dims[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        t
    }

    /// Uniform coefficients in `[-1, 1]`.
    pub fn random(dims: &[usize], rng: &mut impl Rng) -> Self {
        RbTensor::from_fn(dims, |_| {
            RbScalar::from_coeffs(
                rng.random_range(-1.0..=1.0),
                rng.random_range(-1.0..=1.0),
                rng.random_range(-1.0..=1.0),
                rng.random_range(-1.0..=1.0),
            )
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.c1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c1.is_empty()
    }

    pub fn c1(&self) -> &[Complex64] {
        &self.c1
    }

    pub fn c2(&self) -> &[Complex64] {
        &self.c2
    }

    pub fn linear_index(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.dims.len() || idx.iter().zip(&self.dims).any(|(i, d)| i >= d) {
            return Err(RbError::dim(format!("index {idx:?} out of range for dims {:?}", self.dims)));
        }
        Ok(idx.iter().zip(strides(&self.dims)).map(|(i, s)| i * s).sum())
    }

    pub fn multi_index(&self, mut lin: usize) -> Vec<usize> {
        self.dims
            .iter()
            .map(|&d| {
                let i = lin % d;
                lin /= d;
                i
            })
            .collect()
    }

    pub fn get(&self, idx: &[usize]) -> Result<RbScalar> {
        Ok(self.get_linear(self.linear_index(idx)?))
    }

    pub fn set(&mut self, idx: &[usize], v: RbScalar) -> Result<()> {
        let lin = self.linear_index(idx)?;
        self.set_linear(lin, v);
        Ok(())
    }

    pub fn get_linear(&self, lin: usize) -> RbScalar {
        RbScalar::new(self.c1[lin], self.c2[lin])
    }

    pub fn set_linear(&mut self, lin: usize, v: RbScalar) {
        self.c1[lin] = v.c1;
        self.c2[lin] = v.c2;
    }

    pub fn iter(&self) -> impl Iterator<Item = RbScalar> + '_ {
        self.c1.iter().zip(&self.c2).map(|(&a, &b)| RbScalar::new(a, b))
    }

    pub fn frobenius_sqr(&self) -> f64 {
        0.5 * self.c1.iter().chain(&self.c2).map(|z| z.norm_sqr()).sum::<f64>()
    }

    /// `sqrt(sum |t_i|^2)`; equal to the Frobenius norm of every unfolding.
    pub fn frobenius(&self) -> f64 {
        self.frobenius_sqr().sqrt()
    }

    /// `||self - reference||_F / ||reference||_F`.
    pub fn relative_error(&self, reference: &RbTensor) -> Result<f64> {
        self.same_dims(reference)?;
        let denom = reference.frobenius();
        if denom == 0.0 {
            return Err(RbError::arg("relative error against a zero reference"));
        }
        Ok((self - reference).frobenius() / denom)
    }

    pub fn scale(&self, s: f64) -> RbTensor {
        RbTensor {
            dims: self.dims.clone(),
            c1: self.c1.iter().map(|z| z * s).collect(),
            c2: self.c2.iter().map(|z| z * s).collect(),
        }
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, s: f64, other: &RbTensor) {
        debug_assert_eq!(self.dims, other.dims);
        for (a, b) in self.c1.iter_mut().zip(&other.c1) {
            *a += b * s;
        }
        for (a, b) in self.c2.iter_mut().zip(&other.c2) {
            *a += b * s;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.c1.iter().chain(&self.c2).all(|z| z.is_finite())
    }

    pub(crate) fn same_dims(&self, other: &RbTensor) -> Result<()> {
        if self.dims != other.dims {
            return Err(RbError::dim(format!("dims {:?} vs {:?}", self.dims, other.dims)));
        }
        Ok(())
    }

    /// Reinterprets the column-major data with new dimensions.
    pub fn reshape(&self, dims: &[usize]) -> Result<RbTensor> {
        let len = check_dims(dims)?;
        if len != self.len() {
            return Err(RbError::dim(format!("cannot reshape {:?} into {dims:?}", self.dims)));
        }
        Ok(RbTensor { dims: dims.to_vec(), c1: self.c1.clone(), c2: self.c2.clone() })
    }

    pub(crate) fn into_reshaped(mut self, dims: &[usize]) -> RbTensor {
        debug_assert_eq!(dims.iter().product::<usize>(), self.len());
        self.dims = dims.to_vec();
        self
    }

    /// Output mode `i` is input mode `order[i]` (0-based).
    pub fn permute(&self, order: &[usize]) -> Result<RbTensor> {
        if !is_permutation(order, self.order()) {
            return Err(RbError::dim(format!("{order:?} is not a permutation of {} modes", self.order())));
        }
        Ok(RbTensor {
            dims: order.iter().map(|&o| self.dims[o]).collect(),
            c1: permute_data(&self.c1, &self.dims, order),
            c2: permute_data(&self.c2, &self.dims, order),
        })
    }

    /// Matricisation with the given 0-based row and column mode groups.
    pub fn matricize(&self, row_modes: &[usize], col_modes: &[usize]) -> Result<RbMatrix> {
        let order: Vec<usize> = row_modes.iter().chain(col_modes).copied().collect();
        let p = self.permute(&order)?;
        let rows: usize = row_modes.iter().map(|&m| self.dims[m]).product();
        let cols = self.len() / rows;
        Ok(RbMatrix::from_column_major(rows, cols, p.c1, p.c2))
    }

    /// Inverse of [`RbTensor::matricize`].
    pub fn tensorize(m: &RbMatrix, dims: &[usize], row_modes: &[usize], col_modes: &[usize]) -> Result<RbTensor> {
        let order: Vec<usize> = row_modes.iter().chain(col_modes).copied().collect();
        if !is_permutation(&order, dims.len()) {
            return Err(RbError::dim(format!("mode groups {row_modes:?} / {col_modes:?} do not cover {dims:?}")));
        }
        check_dims(dims)?;
        let rows: usize = row_modes.iter().map(|&r| dims[r]).product();
        let cols: usize = col_modes.iter().map(|&c| dims[c]).product();
        if m.shape() != (rows, cols) {
            return Err(RbError::dim(format!(
                "matrix {:?} cannot fold into {dims:?} (expected {rows}x{cols})",
                m.shape()
            )));
        }
        let pdims: Vec<usize> = order.iter().map(|&o| dims[o]).collect();
        let (c1, c2) = m.clone().into_column_major();
        let mut inv = vec![0; order.len()];
        for (i, &o) in order.iter().enumerate() {
            inv[o] = i;
        }
        Ok(RbTensor { dims: dims.to_vec(), c1: permute_data(&c1, &pdims, &inv), c2: permute_data(&c2, &pdims, &inv) })
    }

    fn check_mode(&self, k: usize) -> Result<()> {
        check_mode(self.order(), k)
    }

    /// Classical (Kolda-Bader) mode-k unfolding `T_(k)`.
    pub fn unfold_classical(&self, k: usize) -> Result<RbMatrix> {
        self.check_mode(k)?;
        let (r, c) = classical_modes(self.order(), k);
        self.matricize(&r, &c)
    }

    /// Mode-k unfolding `T_[k]` with columns ordered `i_{k+1}, ..., i_N, i_1, ..., i_{k-1}`.
    pub fn unfold_mode(&self, k: usize) -> Result<RbMatrix> {
        self.check_mode(k)?;
        let (r, c) = mode_modes(self.order(), k);
        self.matricize(&r, &c)
    }

    /// k-mode unfolding `T_<k>`: rows over `i_1..i_k`, columns over `i_{k+1}..i_N`.
    pub fn unfold_kmode(&self, k: usize) -> Result<RbMatrix> {
        self.check_mode(k)?;
        let (r, c) = kmode_modes(self.order(), k);
        self.matricize(&r, &c)
    }

    /// Circular unfolding `X_<k,d>`.
    pub fn unfold_circular(&self, k: usize, d: usize) -> Result<RbMatrix> {
        check_circular(self.order(), k, d)?;
        let (r, c) = circular_modes(self.order(), k, d);
        self.matricize(&r, &c)
    }

    pub fn fold_classical(m: &RbMatrix, k: usize, dims: &[usize]) -> Result<RbTensor> {
        check_mode(dims.len(), k)?;
        let (r, c) = classical_modes(dims.len(), k);
        RbTensor::tensorize(m, dims, &r, &c)
    }

    pub fn fold_mode(m: &RbMatrix, k: usize, dims: &[usize]) -> Result<RbTensor> {
        check_mode(dims.len(), k)?;
        let (r, c) = mode_modes(dims.len(), k);
        RbTensor::tensorize(m, dims, &r, &c)
    }

    pub fn fold_kmode(m: &RbMatrix, k: usize, dims: &[usize]) -> Result<RbTensor> {
        check_mode(dims.len(), k)?;
        let (r, c) = kmode_modes(dims.len(), k);
        RbTensor::tensorize(m, dims, &r, &c)
    }

    pub fn fold_circular(m: &RbMatrix, k: usize, d: usize, dims: &[usize]) -> Result<RbTensor> {
        check_circular(dims.len(), k, d)?;
        let (r, c) = circular_modes(dims.len(), k, d);
        RbTensor::tensorize(m, dims, &r, &c)
    }

    /// Moves the modes circularly by `shift` steps: the result has dims
    /// `I_{s+1}, ..., I_N, I_1, ..., I_s`.
    pub fn rotate_modes(&self, shift: usize) -> RbTensor {
        let n = self.order();
        let order: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        self.permute(&order).expect("rotation is a permutation")
    }
}

fn check_mode(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(RbError::dim(format!("mode {k} out of range 1..={n}")));
    }
    Ok(())
}

fn check_circular(n: usize, k: usize, d: usize) -> Result<()> {
    check_mode(n, k)?;
    if d == 0 || d >= n {
        return Err(RbError::dim(format!("circular offset {d} out of range 1..={}", n.saturating_sub(1))));
    }
    Ok(())
}

impl Add for &RbTensor {
    type Output = RbTensor;
    fn add(self, rhs: &RbTensor) -> RbTensor {
        assert_eq!(self.dims, rhs.dims, "tensor dims differ");
        RbTensor {
            dims: self.dims.clone(),
            c1: self.c1.iter().zip(&rhs.c1).map(|(a, b)| a + b).collect(),
            c2: self.c2.iter().zip(&rhs.c2).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &RbTensor {
    type Output = RbTensor;
    fn sub(self, rhs: &RbTensor) -> RbTensor {
        assert_eq!(self.dims, rhs.dims, "tensor dims differ");
        RbTensor {
            dims: self.dims.clone(),
            c1: self.c1.iter().zip(&rhs.c1).map(|(a, b)| a - b).collect(),
            c2: self.c2.iter().zip(&rhs.c2).map(|(a, b)| a - b).collect(),
        }
    }
}

impl IndexMask {
    pub fn new(dims: &[usize], observed: Vec<bool>) -> Result<Self> {
        let len = check_dims(dims)?;
        if observed.len() != len {
            return Err(RbError::dim(format!("mask has {} entries, dims {dims:?} need {len}", observed.len())));
        }
        Ok(IndexMask { dims: dims.to_vec(), observed })
    }

    pub fn full(dims: &[usize]) -> Self {
        IndexMask { dims: dims.to_vec(), observed: vec![true; dims.iter().product()] }
    }

    pub fn empty(dims: &[usize]) -> Self {
        IndexMask { dims: dims.to_vec(), observed: vec![false; dims.iter().product()] }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn observed(&self) -> &[bool] {
        &self.observed
    }

    pub fn is_observed(&self, lin: usize) -> bool {
        self.observed[lin]
    }

    pub fn count(&self) -> usize {
        self.observed.iter().filter(|&&b| b).count()
    }

    pub fn sampling_rate(&self) -> f64 {
        self.count() as f64 / self.observed.len() as f64
    }

    pub fn complement(&self) -> IndexMask {
        IndexMask { dims: self.dims.clone(), observed: self.observed.iter().map(|b| !b).collect() }
    }
}

/// `P_Omega(T)` when `keep_observed`, otherwise `P_{Omega^c}(T)`.
pub fn project_mask(t: &RbTensor, mask: &IndexMask, keep_observed: bool) -> Result<RbTensor> {
    if t.dims != mask.dims {
        return Err(RbError::dim(format!("mask dims {:?} vs tensor dims {:?}", mask.dims, t.dims)));
    }
    let mut out = t.clone();
    let zero = Complex64::default();
    for (lin, &obs) in mask.observed.iter().enumerate() {
        if obs != keep_observed {
            out.c1[lin] = zero;
            out.c2[lin] = zero;
        }
    }
    Ok(out)
}

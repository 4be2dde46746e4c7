//! ADMM variables and the individual update steps.

use rayon::prelude::*;

use super::tv::{d1, d1t, d2, d2t, from_mode1, mode1, shrink_pairs, SpectralSolver};
use super::Params;
use crate::error::{RbError, Result};
use crate::matrix::RbMatrix;
use crate::tensor::{IndexMask, RbTensor};

/// Primal and dual variables of the augmented Lagrangian.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionState {
    pub x: RbTensor,
    pub a: Vec<RbTensor>,
    pub z: RbTensor,
    pub e1: RbMatrix,
    pub e2: RbMatrix,
    pub b: Vec<RbTensor>,
    pub q: RbTensor,
    pub f1: RbMatrix,
    pub f2: RbMatrix,
    pub iter: usize,
}

impl CompletionState {
    /// `X = A_k = Z = P_Omega(T)`, every multiplier and `E_i` zero.
    pub fn init(t_obs: &RbTensor, mask: &IndexMask) -> Result<Self> {
        let x = crate::tensor::project_mask(t_obs, mask, true)?;
        let n = x.order();
        let dims = x.dims().to_vec();
        let (rows, cols) = (dims[0], x.len() / dims[0]);
        Ok(CompletionState {
            a: vec![x.clone(); n],
            z: x.clone(),
            e1: RbMatrix::zeros(rows, cols),
            e2: RbMatrix::zeros(rows, cols),
            b: vec![RbTensor::zeros(&dims); n],
            q: RbTensor::zeros(&dims),
            f1: RbMatrix::zeros(rows, cols),
            f2: RbMatrix::zeros(rows, cols),
            x,
            iter: 0,
        })
    }

    /// Mode-1 unfolding shape `(I1, t)`.
    pub fn grid(&self) -> (usize, usize) {
        let rows = self.x.dims()[0];
        (rows, self.x.len() / rows)
    }
}

/// `P_{Omega^c}((sum_k (beta1 A_k - B_k) + beta2 Z - Q) / (N beta1 + beta2)) + P_Omega(T)`.
pub fn update_x(state: &CompletionState, t_obs: &RbTensor, mask: &IndexMask, p: &Params) -> RbTensor {
    let n = state.a.len() as f64;
    let mut num = state.z.scale(p.beta2);
    num.add_scaled(-1.0, &state.q);
    for (a, b) in state.a.iter().zip(&state.b) {
        num.add_scaled(p.beta1, a);
        num.add_scaled(-1.0, b);
    }
    let mut x = num.scale(1.0 / (n * p.beta1 + p.beta2));
    for lin in 0..x.len() {
        if mask.is_observed(lin) {
            x.set_linear(lin, t_obs.get_linear(lin));
        }
    }
    x
}

/// `fold_<k,d>(SVT_{alpha_k / beta1}((X + B_k / beta1)_<k,d>))` for 1-based `k`.
pub fn update_a(state: &CompletionState, k: usize, p: &Params) -> Result<RbTensor> {
    let mut gamma = state.x.clone();
    gamma.add_scaled(1.0 / p.beta1, &state.b[k - 1]);
    if !gamma.is_finite() {
        return Err(RbError::NonFinite { update: "A", iteration: state.iter });
    }
    let unfolded = gamma.unfold_circular(k, p.d)?;
    let shrunk = unfolded.svt(p.alphas[k - 1] / p.beta1)?;
    RbTensor::fold_circular(&shrunk, k, p.d, gamma.dims())
}

/// All `N` A-updates, computed in parallel.
pub fn update_all_a(state: &CompletionState, p: &Params) -> Result<Vec<RbTensor>> {
    (1..=state.a.len()).into_par_iter().map(|k| update_a(state, k, p)).collect()
}

/// Right-hand side `beta2 X + Q + D1^T (beta3 E1 - F1) + D2^T (beta3 E2 - F2)`
/// of the Z subproblem, on the mode-1 unfolding.
pub fn z_rhs(state: &CompletionState, p: &Params) -> RbMatrix {
    let mut rhs = mode1(&state.x).scale(p.beta2);
    rhs = &rhs + &mode1(&state.q);
    rhs = &rhs + &d1t(&(&state.e1.scale(p.beta3) - &state.f1));
    &rhs + &d2t(&(&state.e2.scale(p.beta3) - &state.f2))
}

pub fn update_z(state: &CompletionState, p: &Params, solver: &SpectralSolver) -> RbTensor {
    from_mode1(solver.solve(&z_rhs(state, p)), state.x.dims())
}

/// Per-pixel shrinkage of `(D1 Z + F1 / beta3, D2 Z + F2 / beta3)`.
pub fn update_e(state: &CompletionState, p: &Params) -> (RbMatrix, RbMatrix) {
    let z = mode1(&state.z);
    let w1 = &d1(&z) + &state.f1.scale(1.0 / p.beta3);
    let w2 = &d2(&z) + &state.f2.scale(1.0 / p.beta3);
    shrink_pairs(&w1, &w2, p.lambda, p.beta3)
}

/// `B_k += beta1 (X - A_k)`, `Q += beta2 (X - Z)`, `F_i += beta3 (D_i Z - E_i)`.
pub fn update_multipliers(state: &mut CompletionState, p: &Params) {
    for (b, a) in state.b.iter_mut().zip(&state.a) {
        b.add_scaled(p.beta1, &(&state.x - a));
    }
    state.q.add_scaled(p.beta2, &(&state.x - &state.z));
    let z = mode1(&state.z);
    state.f1 = &state.f1 + &(&d1(&z) - &state.e1).scale(p.beta3);
    state.f2 = &state.f2 + &(&d2(&z) - &state.e2).scale(p.beta3);
}

//! RBTR-TV completion: ADMM on
//!
//! ```text
//! min  sum_k alpha_k ||A_k,<k,d>||_* + lambda ||E||_{2,1}
//! s.t. X = A_k, X = Z, D_i Z_(1) = E_i, P_Omega(X) = P_Omega(T)
//! ```
//!
//! with periodic differences on the mode-1 unfolding (see [`tv`]).

pub mod tv;
pub mod updates;

use serde::{Deserialize, Serialize};

use crate::error::{RbError, Result};
use crate::tensor::{IndexMask, RbTensor};

pub use tv::{gradient_spectrum, tv_value, SpectralSolver};
pub use updates::{update_a, update_all_a, update_e, update_multipliers, update_x, update_z, CompletionState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionConfig {
    /// Per-mode nuclear-norm weights; `None` means uniform. Normalised to sum 1.
    pub alphas: Option<Vec<f64>>,
    pub lambda: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    /// Circular-unfolding width; `None` means `round(N / 2)`.
    pub d: Option<usize>,
    pub max_iter: usize,
    pub rel_tol: f64,
    /// Mask seed, carried for reproducibility records.
    pub seed: u64,
    /// Evaluate the objective after every iteration (costs `N` extra SVDs).
    pub track_objective: bool,
}

impl Default for CompletionConfig {
    fn default() -> Self {
        CompletionConfig {
            alphas: None,
            lambda: 0.3,
            beta1: 5e-3,
            beta2: 0.1,
            beta3: 5e-3,
            d: None,
            max_iter: 300,
            rel_tol: 1e-5,
            seed: 0,
            track_objective: true,
        }
    }
}

/// Validated parameters for a tensor of known order.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub alphas: Vec<f64>,
    pub lambda: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub d: usize,
}

impl CompletionConfig {
    pub fn resolve(&self, order: usize) -> Result<Params> {
        if order < 2 {
            return Err(RbError::arg(format!("completion needs a tensor of order >= 2, got {order}")));
        }
        for (name, v) in [("beta1", self.beta1), ("beta2", self.beta2), ("beta3", self.beta3)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(RbError::arg(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(RbError::arg(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        if self.rel_tol.is_nan() || self.rel_tol < 0.0 {
            return Err(RbError::arg(format!("rel_tol must be nonnegative, got {}", self.rel_tol)));
        }
        let alphas = match &self.alphas {
            None => vec![1.0 / order as f64; order],
            Some(a) => {
                if a.len() != order {
                    return Err(RbError::arg(format!("{} alpha weights for a tensor of order {order}", a.len())));
                }
                if a.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                    return Err(RbError::arg(format!("alpha weights must be positive, got {a:?}")));
                }
                let sum: f64 = a.iter().sum();
                a.iter().map(|v| v / sum).collect()
            }
        };
        let d = self.d.unwrap_or_else(|| ((order as f64) / 2.0).round() as usize);
        if d == 0 || d >= order {
            return Err(RbError::arg(format!("d must lie in 1..{order}, got {d}")));
        }
        Ok(Params { alphas, lambda: self.lambda, beta1: self.beta1, beta2: self.beta2, beta3: self.beta3, d })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `max_k ||X - A_k||_F / ||X||_F`.
    pub x_a: Vec<f64>,
    /// `||X - Z||_F / ||X||_F`.
    pub x_z: Vec<f64>,
    /// `sqrt(sum_i ||D_i Z_(1) - E_i||_F^2) / ||X||_F`.
    pub grad_e: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub rel_change: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub psnr: Option<f64>,
    pub objective: Vec<f64>,
    pub residuals: Residuals,
}

/// Snapshot handed to the progress observer after each iteration.
#[derive(Debug, Clone, Copy)]
pub struct Progress {
    pub iteration: usize,
    pub rel_change: f64,
    pub x_a: f64,
    pub x_z: f64,
    pub grad_e: f64,
}

/// `sum_k alpha_k ||X_<k,d>||_* + lambda TV(X)`.
pub fn objective(x: &RbTensor, p: &Params) -> Result<f64> {
    let mut total = p.lambda * tv_value(x);
    for (k, &alpha) in p.alphas.iter().enumerate() {
        total += alpha * x.unfold_circular(k + 1, p.d)?.nuclear_norm()?;
    }
    Ok(total)
}

fn check_finite(ok: bool, update: &'static str, iteration: usize) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(RbError::NonFinite { update, iteration })
    }
}

pub fn solve(t_obs: &RbTensor, mask: &IndexMask, cfg: &CompletionConfig) -> Result<(RbTensor, SolveReport)> {
    solve_with(t_obs, mask, cfg, |_| {})
}

/// Runs the ADMM iteration, calling `observer` after every iteration.
pub fn solve_with(
    t_obs: &RbTensor,
    mask: &IndexMask,
    cfg: &CompletionConfig,
    mut observer: impl FnMut(&Progress),
) -> Result<(RbTensor, SolveReport)> {
    if mask.dims() != t_obs.dims() {
        return Err(RbError::dim(format!("mask dims {:?} differ from tensor dims {:?}", mask.dims(), t_obs.dims())));
    }
    if (0..t_obs.len()).any(|i| mask.is_observed(i) && !t_obs.get_linear(i).is_finite()) {
        return Err(RbError::arg("observed entries must be finite"));
    }
    let p = cfg.resolve(t_obs.order())?;
    let mut state = CompletionState::init(t_obs, mask)?;
    let (rows, cols) = state.grid();
    let solver = SpectralSolver::new(rows, cols, p.beta2, p.beta3);
    let mut report = SolveReport::default();
    let fully_observed = mask.count() == t_obs.len();

    for iter in 1..=cfg.max_iter {
        state.iter = iter;
        let prev_norm = state.x.frobenius();
        let x_new = update_x(&state, t_obs, mask, &p);
        check_finite(x_new.is_finite(), "X", iter)?;
        let change = (&x_new - &state.x).frobenius() / if prev_norm > 0.0 { prev_norm } else { 1.0 };
        state.x = x_new;

        state.a = update_all_a(&state, &p)?;
        check_finite(state.a.iter().all(RbTensor::is_finite), "A", iter)?;
        state.z = update_z(&state, &p, &solver);
        check_finite(state.z.is_finite(), "Z", iter)?;
        let (e1, e2) = update_e(&state, &p);
        check_finite(e1.is_finite() && e2.is_finite(), "E", iter)?;
        state.e1 = e1;
        state.e2 = e2;
        update_multipliers(&mut state, &p);
        check_finite(
            state.b.iter().all(RbTensor::is_finite) && state.q.is_finite() && state.f1.is_finite() && state.f2.is_finite(),
            "multiplier",
            iter,
        )?;

        let progress = residuals(&state, iter, change);
        report.rel_change.push(change);
        report.residuals.x_a.push(progress.x_a);
        report.residuals.x_z.push(progress.x_z);
        report.residuals.grad_e.push(progress.grad_e);
        if cfg.track_objective {
            report.objective.push(objective(&state.x, &p)?);
        }
        report.iterations = iter;
        observer(&progress);
        // With X^0 = A^0 = Z^0 and zero multipliers the first X-update is the
        // identity, so its zero change says nothing unless every entry is observed.
        let fixed = iter == 1 && !fully_observed;
        if change < cfg.rel_tol && !fixed {
            break;
        }
    }
    Ok((state.x, report))
}

fn residuals(state: &CompletionState, iteration: usize, rel_change: f64) -> Progress {
    let norm = state.x.frobenius();
    let denom = if norm > 0.0 { norm } else { 1.0 };
    let x_a = state.a.iter().map(|a| (&state.x - a).frobenius()).fold(0.0, f64::max) / denom;
    let x_z = (&state.x - &state.z).frobenius() / denom;
    let z = tv::mode1(&state.z);
    let g1 = (&tv::d1(&z) - &state.e1).frobenius();
    let g2 = (&tv::d2(&z) - &state.e2).frobenius();
    Progress { iteration, rel_change, x_a, x_z, grad_e: (g1 * g1 + g2 * g2).sqrt() / denom }
}

//! Numeric oracles shared by the integration targets. Each `*_gap` function
//! runs a batch of random instances and returns the worst relative gap
//! between the closed-form solver and its brute-force counterpart.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rbtr_core::completion::tv::{self, SpectralSolver};
use rbtr_core::completion::updates::{update_e, update_z, z_rhs};
use rbtr_core::completion::{CompletionConfig, CompletionState};
use rbtr_core::matrix::group_shrink;
use rbtr_core::{IndexMask, RbMatrix, RbScalar, RbTensor, TrCores};

pub fn to_reals(v: &[RbScalar]) -> Vec<f64> {
    v.iter().flat_map(|q| q.coeffs()).collect()
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn group_lasso_value(x: &[f64], y: &[f64], lambda: f64, beta: f64) -> f64 {
    let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
    0.5 * beta * d + lambda * norm(x)
}

/// Minimises `(beta/2)||x - y||^2 + lambda ||x||` over `R^m` by gradient
/// descent with backtracking, then compares against the origin.
pub fn group_lasso_numeric(y: &[f64], lambda: f64, beta: f64) -> Vec<f64> {
    let f = |x: &[f64]| group_lasso_value(x, y, lambda, beta);
    let mut x = y.to_vec();
    let mut step = 1.0 / beta;
    for _ in 0..20_000 {
        let nx = norm(&x);
        if nx < 1e-300 {
            break;
        }
        let g: Vec<f64> = x.iter().zip(y).map(|(a, b)| beta * (a - b) + lambda * a / nx).collect();
        if norm(&g) < 1e-13 {
            break;
        }
        let fx = f(&x);
        loop {
            let cand: Vec<f64> = x.iter().zip(&g).map(|(a, d)| a - step * d).collect();
            if f(&cand) <= fx - 0.25 * step * norm(&g).powi(2) || step < 1e-18 {
                x = cand;
                break;
            }
            step *= 0.5;
        }
        step *= 2.0;
    }
    let zero = vec![0.0; y.len()];
    if f(&zero) <= f(&x) {
        zero
    } else {
        x
    }
}

pub fn rand_vec(n: usize, scale: f64, rng: &mut impl Rng) -> Vec<RbScalar> {
    (0..n)
        .map(|_| {
            RbScalar::from_coeffs(
                scale * rng.random_range(-1.0..1.0),
                scale * rng.random_range(-1.0..1.0),
                scale * rng.random_range(-1.0..1.0),
                scale * rng.random_range(-1.0..1.0),
            )
        })
        .collect()
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

/// Relative gap of a candidate against the numeric minimiser: the larger of
/// the objective excess and the argmin distance.
fn lasso_gap(closed: &[f64], y: &[f64], lambda: f64, beta: f64) -> f64 {
    let numeric = group_lasso_numeric(y, lambda, beta);
    let (fc, fnum) = (group_lasso_value(closed, y, lambda, beta), group_lasso_value(&numeric, y, lambda, beta));
    let excess = (fc - fnum).max(0.0) / fnum.abs().max(1e-12);
    excess.max(dist(closed, &numeric) / norm(y).max(1.0))
}

pub fn group_shrink_gap(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for case in 0..cases {
        let n = 1 + case % 3;
        let (lambda, beta) = (rng.random_range(0.05..1.0), rng.random_range(0.1..2.0));
        let y = rand_vec(n, rng.random_range(0.1..2.0), &mut rng);
        let closed = to_reals(&group_shrink(&y, lambda, beta));
        worst = worst.max(lasso_gap(&closed, &to_reals(&y), lambda, beta));
    }
    worst
}

/// `tau (||A_1||_* + ||A_2||_*) / 2 + ||A - G||_F^2 / 2`.
pub fn split_objective(a: &RbMatrix, g: &RbMatrix, tau: f64) -> f64 {
    let s = a.rbsvd().unwrap();
    let split: f64 = s.sigma1.iter().chain(&s.sigma2).sum::<f64>() / 2.0;
    tau * split + 0.5 * (a - g).frobenius().powi(2)
}

/// `tau ||A||_* + ||A - G||_F^2 / 2` with the RB nuclear norm (sum of
/// singular-value moduli).
pub fn rb_objective(a: &RbMatrix, g: &RbMatrix, tau: f64) -> f64 {
    tau * a.nuclear_norm().unwrap() + 0.5 * (a - g).frobenius().powi(2)
}

/// Random search around `svt(G, tau)` for lower values of `objective`;
/// returns the worst relative improvement found.
pub fn svt_gap(cases: usize, seed: u64, objective: fn(&RbMatrix, &RbMatrix, f64) -> f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let g = RbMatrix::random(2, 2, &mut rng);
        let tau = rng.random_range(0.05..1.0);
        let a = g.svt(tau).unwrap();
        let fa = objective(&a, &g, tau);
        let mut best = fa;
        let mut centre = a.clone();
        for r in [1e-1, 3e-2, 1e-2, 3e-3, 1e-3] {
            for _ in 0..200 {
                let p = &centre + &RbMatrix::random(2, 2, &mut rng).scale(r);
                let fp = objective(&p, &g, tau);
                if fp < best {
                    best = fp;
                    centre = p;
                }
            }
        }
        worst = worst.max((fa - best) / fa.max(1e-12));
    }
    worst
}

// Periodic differences written straight from the index formulas.
fn diff_cols(m: &RbMatrix, i: usize, j: usize) -> RbScalar {
    m.get(i, (j + 1) % m.cols()) - m.get(i, j)
}

fn diff_rows(m: &RbMatrix, i: usize, j: usize) -> RbScalar {
    m.get((i + 1) % m.rows(), j) - m.get(i, j)
}

pub fn random_state(dims: &[usize], rng: &mut ChaCha8Rng) -> CompletionState {
    let t = RbTensor::random(dims, rng);
    let mut s = CompletionState::init(&t, &IndexMask::full(dims)).unwrap();
    let (rows, cols) = s.grid();
    s.z = RbTensor::random(dims, rng);
    s.q = RbTensor::random(dims, rng);
    s.e1 = RbMatrix::random(rows, cols, rng);
    s.e2 = RbMatrix::random(rows, cols, rng);
    s.f1 = RbMatrix::random(rows, cols, rng);
    s.f2 = RbMatrix::random(rows, cols, rng);
    s
}

/// Z-update on a 4x4 grid against an LU solve of the operator assembled
/// entry by entry from the five-point stencil.
pub fn z_update_gap(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = CompletionConfig::default().resolve(3).unwrap();
    let (rows, cols) = (4, 4);
    let n = rows * cols;
    let mut op = nalgebra::DMatrix::<f64>::zeros(n, n);
    let idx = |i: usize, j: usize| (i % rows) + (j % cols) * rows;
    for j in 0..cols {
        for i in 0..rows {
            let me = idx(i, j);
            op[(me, me)] += p.beta2 + 4.0 * p.beta3;
            for other in [idx(i + 1, j), idx(i + rows - 1, j), idx(i, j + 1), idx(i, j + cols - 1)] {
                op[(me, other)] -= p.beta3;
            }
        }
    }
    let lu = op.lu();
    let solver = SpectralSolver::new(rows, cols, p.beta2, p.beta3);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let s = random_state(&[4, 2, 2], &mut rng);
        let z = tv::mode1(&update_z(&s, &p, &solver));
        let rhs = z_rhs(&s, &p);
        for channel in 0..2 {
            let pick = |m: &RbMatrix| if channel == 0 { m.c1().clone() } else { m.c2().clone() };
            let b = pick(&rhs);
            let want_re = lu.solve(&nalgebra::DVector::from_iterator(n, b.iter().map(|c| c.re))).unwrap();
            let want_im = lu.solve(&nalgebra::DVector::from_iterator(n, b.iter().map(|c| c.im))).unwrap();
            let got = pick(&z);
            let scale = want_re.norm().hypot(want_im.norm());
            let err = got
                .iter()
                .enumerate()
                .map(|(k, g)| (g.re - want_re[k]).powi(2) + (g.im - want_im[k]).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(err / scale);
        }
    }
    worst
}

/// E-update against a per-pixel numeric minimisation over the eight real
/// coordinates of the gradient pair.
pub fn e_update_gap(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let mut s = random_state(&[3, 2, 2], &mut rng);
        let cfg = CompletionConfig {
            beta3: rng.random_range(0.5..2.0),
            lambda: rng.random_range(0.1..3.0),
            ..CompletionConfig::default()
        };
        let p = cfg.resolve(3).unwrap();
        s.f1 = s.f1.scale(p.beta3);
        let (e1, e2) = update_e(&s, &p);
        let z = tv::mode1(&s.z);
        for j in 0..z.cols() {
            for i in 0..z.rows() {
                let w = [
                    diff_cols(&z, i, j) + s.f1.get(i, j).scale(1.0 / p.beta3),
                    diff_rows(&z, i, j) + s.f2.get(i, j).scale(1.0 / p.beta3),
                ];
                let got = to_reals(&[e1.get(i, j), e2.get(i, j)]);
                worst = worst.max(lasso_gap(&got, &to_reals(&w), p.lambda, p.beta3));
            }
        }
    }
    worst
}

/// Random cores with `N in 3..=5`, ranks and dims at most 3 and 4.
pub fn random_cores(rng: &mut ChaCha8Rng) -> TrCores {
    let n = rng.random_range(3..=5);
    let dims: Vec<usize> = (0..n).map(|_| rng.random_range(1..=4)).collect();
    let ranks: Vec<usize> = (0..n).map(|_| rng.random_range(1..=3)).collect();
    TrCores::random(&dims, &ranks, rng).unwrap()
}

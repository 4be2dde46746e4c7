//! Tensor rings over RB cores and the RBTR-SVD decomposition.
//!
//! Core `k` is an `r_k x I_k x r_{k+1}` tensor with `r_{N+1} = r_1`, and
//! `T(i_1, ..., i_N) = Tr(Z_1(i_1) Z_2(i_2) ... Z_N(i_N))` where `Z_k(i)` is
//! the `r_k x r_{k+1}` lateral slice.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{RbError, Result};
use crate::format;
use crate::matrix::RbMatrix;
use crate::scalar::RbScalar;
use crate::tensor::RbTensor;

#[derive(Debug, Clone, PartialEq)]
pub struct TrCores {
    cores: Vec<RbTensor>,
    ranks: Vec<usize>,
}

/// JSON sidecar written next to the core blobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoresManifest {
    pub ranks: Vec<usize>,
    pub dims: Vec<usize>,
    pub eps: Option<f64>,
}

fn as_matrix(t: &RbTensor, rows: usize) -> RbMatrix {
    let cols = t.len() / rows;
    RbMatrix::from_column_major(rows, cols, t.c1().to_vec(), t.c2().to_vec())
}

fn from_matrix(m: RbMatrix, dims: &[usize]) -> RbTensor {
    let (c1, c2) = m.into_column_major();
    RbTensor::from_channels(dims, c1, c2).expect("matrix size matches dims")
}

impl TrCores {
    pub fn new(cores: Vec<RbTensor>) -> Result<Self> {
        let n = cores.len();
        if n < 2 {
            return Err(RbError::arg(format!("a tensor ring needs at least 2 cores, got {n}")));
        }
        if let Some((k, c)) = cores.iter().enumerate().find(|(_, c)| c.order() != 3) {
            return Err(RbError::dim(format!("core {} has order {}, expected 3", k + 1, c.order())));
        }
        let ranks: Vec<usize> = cores.iter().map(|c| c.dims()[0]).collect();
        for k in 0..n {
            let right = cores[k].dims()[2];
            if right != ranks[(k + 1) % n] {
                return Err(RbError::dim(format!(
                    "core {} has right rank {right}, core {} has left rank {}",
                    k + 1,
                    (k + 1) % n + 1,
                    ranks[(k + 1) % n]
                )));
            }
        }
        Ok(TrCores { cores, ranks })
    }

    /// Cores with coefficients uniform in `[-1, 1]`.
    pub fn random(dims: &[usize], ranks: &[usize], rng: &mut impl Rng) -> Result<Self> {
        if dims.len() != ranks.len() {
            return Err(RbError::dim(format!("{} dims but {} ranks", dims.len(), ranks.len())));
        }
        let n = dims.len();
        let cores = (0..n)
            .map(|k| RbTensor::random(&[ranks[k], dims[k], ranks[(k + 1) % n]], rng))
            .collect();
        TrCores::new(cores)
    }

    pub fn cores(&self) -> &[RbTensor] {
        &self.cores
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    /// Mode sizes `I_1..I_N` of the represented tensor.
    pub fn dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims()[1]).collect()
    }

    /// Lateral slice `Z_k(i)` (0-based `k` and `i`).
    pub fn slice(&self, k: usize, i: usize) -> RbMatrix {
        let c = &self.cores[k];
        let (r0, r1) = (c.dims()[0], c.dims()[2]);
        RbMatrix::from_fn(r0, r1, |a, b| c.get_linear(a + i * r0 + b * r0 * c.dims()[1]))
    }

    /// `Tr(Z_1(i_1) ... Z_N(i_N))` for a 0-based multi-index.
    pub fn element(&self, idx: &[usize]) -> Result<RbScalar> {
        let dims = self.dims();
        if idx.len() != dims.len() || idx.iter().zip(&dims).any(|(i, d)| i >= d) {
            return Err(RbError::dim(format!("index {idx:?} out of range for dims {dims:?}")));
        }
        let mut acc = self.slice(0, idx[0]);
        for (k, &i) in idx.iter().enumerate().skip(1) {
            acc = acc.matmul(&self.slice(k, i))?;
        }
        Ok(acc.trace())
    }

    /// Merges cores `first..=last` (0-based) into an
    /// `r_first x (I_first ... I_last) x r_{last+1}` tensor whose lateral
    /// slices are the slice products, merged index first-fastest.
    fn merge(&self, first: usize, last: usize) -> RbTensor {
        let n = self.order();
        let mut acc = self.cores[first].clone();
        let left = self.ranks[first];
        let mut middle = self.cores[first].dims()[1];
        for k in first + 1..=last {
            let core = &self.cores[k];
            let (rk, ik, rnext) = (core.dims()[0], core.dims()[1], core.dims()[2]);
            let lhs = as_matrix(&acc, left * middle);
            let rhs = as_matrix(core, rk);
            let prod = lhs.matmul(&rhs).expect("adjacent ranks chain");
            middle *= ik;
            acc = from_matrix(prod, &[left, middle, rnext]);
        }
        debug_assert_eq!(acc.dims()[2], self.ranks[(last + 1) % n]);
        acc
    }

    /// Subchain `Z^{<=k}` of the first `k` cores, `1 <= k <= N - 1`.
    pub fn subchain_le(&self, k: usize) -> Result<RbTensor> {
        self.check_split(k)?;
        Ok(self.merge(0, k - 1))
    }

    /// Subchain `Z^{>k}` of the last `N - k` cores, `1 <= k <= N - 1`.
    pub fn subchain_gt(&self, k: usize) -> Result<RbTensor> {
        self.check_split(k)?;
        Ok(self.merge(k, self.order() - 1))
    }

    fn check_split(&self, k: usize) -> Result<()> {
        if k == 0 || k >= self.order() {
            return Err(RbError::dim(format!("subchain split {k} out of range 1..{}", self.order())));
        }
        Ok(())
    }

    /// Full tensor, via the closed subchain of all cores and its trace.
    pub fn reconstruct(&self) -> RbTensor {
        let dims = self.dims();
        let full = self.merge(0, self.order() - 1);
        let r = self.ranks[0];
        let p: usize = dims.iter().product();
        let mut out = RbTensor::zeros(&dims);
        for i in 0..p {
            let mut acc = RbScalar::ZERO;
            for a in 0..r {
                acc += full.get_linear(a + i * r + a * r * p);
            }
            out.set_linear(i, acc);
        }
        out
    }

    /// Cores `Z_{s+1}, ..., Z_N, Z_1, ..., Z_s`.
    pub fn rotate(&self, shift: usize) -> TrCores {
        let n = self.order();
        let cores = (0..n).map(|i| self.cores[(i + shift) % n].clone()).collect();
        TrCores::new(cores).expect("rotation preserves rank chaining")
    }

    /// Number of RB entries across all cores, `sum r_k I_k r_{k+1}`.
    pub fn storage_cost(&self) -> usize {
        self.cores.iter().map(RbTensor::len).sum()
    }

    /// `prod(original_dims) / storage_cost`.
    pub fn compression_ratio(&self, original_dims: &[usize]) -> f64 {
        original_dims.iter().product::<usize>() as f64 / self.storage_cost() as f64
    }

    pub fn manifest(&self, eps: Option<f64>) -> CoresManifest {
        CoresManifest { ranks: self.ranks.clone(), dims: self.dims(), eps }
    }

    /// Writes `core_XX.rbt` blobs and a `cores.json` sidecar into `dir`.
    pub fn save(&self, dir: &Path, eps: Option<f64>) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (k, core) in self.cores.iter().enumerate() {
            format::save_tensor(&dir.join(core_file_name(k)), core)?;
        }
        let json = serde_json::to_vec_pretty(&self.manifest(eps))?;
        format::write_atomic(&dir.join("cores.json"), &json)
    }

    pub fn load(dir: &Path) -> Result<(TrCores, CoresManifest)> {
        let manifest: CoresManifest = serde_json::from_slice(&fs::read(dir.join("cores.json"))?)?;
        let cores = (0..manifest.ranks.len())
            .map(|k| format::load_tensor(&dir.join(core_file_name(k))))
            .collect::<Result<Vec<_>>>()?;
        let tr = TrCores::new(cores)?;
        if tr.ranks != manifest.ranks || tr.dims() != manifest.dims {
            return Err(RbError::Format("cores.json does not match the core blobs".into()));
        }
        Ok((tr, manifest))
    }
}

fn core_file_name(k: usize) -> String {
    format!("core_{:02}.rbt", k + 1)
}

/// Smallest rank `r >= 1` whose discarded tail satisfies
/// `sum_{i >= r} moduli[i]^2 <= delta^2`.
pub fn truncation_rank(moduli: &[f64], delta: f64) -> usize {
    let budget = delta * delta;
    let mut tail = 0.0;
    let mut r = moduli.len();
    while r > 0 {
        let next = tail + moduli[r - 1] * moduli[r - 1];
        if next > budget {
            break;
        }
        tail = next;
        r -= 1;
    }
    r.max(1)
}

/// Factor `rank = r1 * r2` with `|r1 - r2|` minimal and `r1 <= r2`.
pub fn split_rank(rank: usize) -> (usize, usize) {
    let mut best = (1, rank);
    let mut r1 = 1;
    while r1 * r1 <= rank {
        if rank.is_multiple_of(r1) {
            best = (r1, rank / r1);
        }
        r1 += 1;
    }
    best
}

/// RBTR-SVD: sequential truncated RBSVDs with thresholds
/// `delta_1 = sqrt(2) eps ||T||_F / sqrt(N)` and `delta_k = eps ||T||_F / sqrt(N)`.
///
/// Each step keeps the smallest rank whose discarded singular-value energy is
/// within its threshold, so `||T - TR(Z)||_F <= eps ||T||_F`.
pub fn rbtr_svd(t: &RbTensor, eps: f64) -> Result<TrCores> {
    let n = t.order();
    if n < 2 {
        return Err(RbError::arg(format!("RBTR-SVD needs a tensor of order >= 2, got {n}")));
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(RbError::arg(format!("tolerance must be positive, got {eps}")));
    }
    let dims = t.dims();
    let norm = t.frobenius();
    let delta_first = std::f64::consts::SQRT_2 * eps * norm / (n as f64).sqrt();
    let delta = eps * norm / (n as f64).sqrt();

    let rest: usize = dims[1..].iter().product();
    let mut svd = as_matrix(t, dims[0]).rbsvd()?;
    let rank = truncation_rank(&svd.moduli(), delta_first);
    svd.truncate(rank);
    let (r1, r2) = split_rank(rank);

    let mut cores = Vec::with_capacity(n);
    let u = from_matrix(svd.u.clone(), &[dims[0], r1, r2]);
    cores.push(u.permute(&[1, 0, 2])?);
    let sv = from_matrix(svd.sigma_vh(), &[r1, r2, rest]);
    let mut remainder = sv.permute(&[1, 2, 0])?;

    let mut r_k = r2;
    for k in 1..n - 1 {
        let i_k = dims[k];
        let tail: usize = dims[k + 1..].iter().product();
        let mut svd = as_matrix(&remainder, r_k * i_k).rbsvd()?;
        let r_next = truncation_rank(&svd.moduli(), delta);
        svd.truncate(r_next);
        cores.push(from_matrix(svd.u.clone(), &[r_k, i_k, r_next]));
        remainder = from_matrix(svd.sigma_vh(), &[r_next, tail, r1]);
        r_k = r_next;
    }
    cores.push(remainder.into_reshaped(&[r_k, dims[n - 1], r1]));
    TrCores::new(cores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn brute_element(tr: &TrCores, idx: &[usize]) -> RbScalar {
        // explicit sum over all internal rank indices via rb_mul
        let n = tr.order();
        let ranks = tr.ranks();
        let total: usize = ranks.iter().product();
        let mut acc = RbScalar::ZERO;
        for combo in 0..total {
            let mut rest = combo;
            let alpha: Vec<usize> = ranks
                .iter()
                .map(|&r| {
                    let a = rest % r;
                    rest /= r;
                    a
                })
                .collect();
            let mut term = RbScalar::ONE;
            for k in 0..n {
                let core = &tr.cores()[k];
                term *= core.get(&[alpha[k], idx[k], alpha[(k + 1) % n]]).unwrap();
            }
            acc += term;
        }
        acc
    }

    #[test]
    fn element_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let tr = TrCores::random(&[2, 3, 2], &[2, 2, 2], &mut rng).unwrap();
        let full = tr.reconstruct();
        for lin in 0..full.len() {
            let idx = full.multi_index(lin);
            let want = brute_element(&tr, &idx);
            assert!((tr.element(&idx).unwrap() - want).modulus() < 1e-12);
            assert!((full.get_linear(lin) - want).modulus() < 1e-12);
        }
        assert!(tr.element(&[2, 0, 0]).is_err());
    }

    #[test]
    fn rank_one_rings_are_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let tr = TrCores::random(&[3, 4], &[1, 1], &mut rng).unwrap();
        let full = tr.reconstruct();
        for i in 0..3 {
            for j in 0..4 {
                let want = tr.cores()[0].get_linear(i) * tr.cores()[1].get_linear(j);
                assert!((full.get(&[i, j]).unwrap() - want).modulus() < 1e-15);
            }
        }
        let single = TrCores::random(&[1, 1, 1], &[2, 3, 1], &mut rng).unwrap();
        let all = single.slice(0, 0).matmul(&single.slice(1, 0)).unwrap().matmul(&single.slice(2, 0)).unwrap();
        assert!((single.reconstruct().get_linear(0) - all.trace()).modulus() < 1e-14);
    }

    #[test]
    fn rotation_permutes_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let tr = TrCores::random(&[2, 3, 4, 2], &[2, 3, 1, 2], &mut rng).unwrap();
        let full = tr.reconstruct();
        for s in 0..4 {
            let rotated = tr.rotate(s).reconstruct();
            let want = full.rotate_modes(s);
            assert_eq!(rotated.dims(), want.dims());
            assert!((&rotated - &want).frobenius() < 1e-12);
        }
    }

    #[test]
    fn subchains() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let tr = TrCores::random(&[2, 3, 2, 2], &[2, 1, 3, 2], &mut rng).unwrap();
        assert_eq!(tr.subchain_le(1).unwrap(), tr.cores()[0]);
        assert_eq!(tr.subchain_gt(3).unwrap(), tr.cores()[3]);
        let le = tr.subchain_le(3).unwrap();
        assert_eq!(le.dims(), &[2, 12, 2]);
        let gt = tr.subchain_gt(1).unwrap();
        assert_eq!(gt.dims(), &[1, 12, 2]);
        for i1 in 0..2 {
            for i2 in 0..3 {
                for i3 in 0..2 {
                    let chain = tr.slice(0, i1).matmul(&tr.slice(1, i2)).unwrap().matmul(&tr.slice(2, i3)).unwrap();
                    let merged = i1 + 2 * i2 + 6 * i3;
                    for a in 0..2 {
                        for b in 0..2 {
                            assert!((le.get(&[a, merged, b]).unwrap() - chain.get(a, b)).modulus() < 1e-13);
                        }
                    }
                    let chain = tr.slice(1, i1 % 3).matmul(&tr.slice(2, i2 % 2)).unwrap().matmul(&tr.slice(3, i3)).unwrap();
                    let merged = i1 % 3 + 3 * (i2 % 2) + 6 * i3;
                    for b in 0..2 {
                        assert!((gt.get(&[0, merged, b]).unwrap() - chain.get(0, b)).modulus() < 1e-13);
                    }
                }
            }
        }
        assert!(tr.subchain_le(0).is_err());
        assert!(tr.subchain_gt(4).is_err());

        let ones = TrCores::random(&[3, 2, 2], &[1, 1, 1], &mut rng).unwrap();
        let le2 = ones.subchain_le(2).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                let want = ones.cores()[0].get_linear(i) * ones.cores()[1].get_linear(j);
                assert_eq!(le2.get_linear(i + 3 * j), want);
            }
        }
    }

    #[test]
    fn invalid_rings() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        assert!(TrCores::new(vec![RbTensor::random(&[1, 2, 1], &mut rng)]).is_err());
        let a = RbTensor::random(&[2, 3, 2], &mut rng);
        let b = RbTensor::random(&[3, 3, 2], &mut rng);
        assert!(TrCores::new(vec![a, b]).is_err());
    }

    #[test]
    fn rank_split_rule() {
        assert_eq!(split_rank(1), (1, 1));
        assert_eq!(split_rank(4), (2, 2));
        assert_eq!(split_rank(6), (2, 3));
        assert_eq!(split_rank(12), (3, 4));
        assert_eq!(split_rank(7), (1, 7));
        assert_eq!(split_rank(16), (4, 4));
    }

    #[test]
    fn truncation_rule() {
        let m = [4.0, 2.0, 1.0, 0.5];
        assert_eq!(truncation_rank(&m, 0.0), 4);
        assert_eq!(truncation_rank(&m, 0.5), 3);
        assert_eq!(truncation_rank(&m, 1.2), 2);
        assert_eq!(truncation_rank(&m, 100.0), 1);
        assert_eq!(truncation_rank(&[0.0, 0.0], 0.0), 1);
    }

    #[test]
    fn recovers_synthetic_ring() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let truth = TrCores::random(&[3, 4, 5], &[1, 2, 2], &mut rng).unwrap();
        let t = truth.reconstruct();
        let tr = rbtr_svd(&t, 1e-10).unwrap();
        assert!(tr.reconstruct().relative_error(&t).unwrap() <= 1e-8);
        let cost: usize = (0..3).map(|k| tr.ranks()[k] * [3, 4, 5][k] * tr.ranks()[(k + 1) % 3]).sum();
        assert_eq!(tr.storage_cost(), cost);
    }

    #[test]
    fn outer_product_has_unit_ranks() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let truth = TrCores::random(&[3, 2, 4, 2], &[1, 1, 1, 1], &mut rng).unwrap();
        let tr = rbtr_svd(&truth.reconstruct(), 1e-8).unwrap();
        assert_eq!(tr.ranks(), &[1, 1, 1, 1]);
        assert_eq!(tr.storage_cost(), 3 + 2 + 4 + 2);
        assert!((tr.compression_ratio(&[3, 2, 4, 2]) - 48.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn eps_bound_on_random_tensor() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let t = RbTensor::random(&[4, 4, 4, 4], &mut rng);
        let tr = rbtr_svd(&t, 0.1).unwrap();
        assert!(tr.reconstruct().relative_error(&t).unwrap() <= 0.1);
    }

    #[test]
    fn rejects_bad_arguments() {
        let t = RbTensor::zeros(&[4]);
        assert!(rbtr_svd(&t, 0.1).is_err());
        assert!(rbtr_svd(&RbTensor::zeros(&[2, 2]), 0.0).is_err());
        // zero tensor: every threshold is zero, ranks clamp to 1
        let tr = rbtr_svd(&RbTensor::zeros(&[2, 3, 2]), 0.1).unwrap();
        assert_eq!(tr.ranks(), &[1, 1, 1]);
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let tr = TrCores::random(&[2, 3, 2], &[2, 1, 3], &mut rng).unwrap();
        tr.save(dir.path(), Some(0.05)).unwrap();
        let (back, manifest) = TrCores::load(dir.path()).unwrap();
        assert_eq!(back, tr);
        assert_eq!(manifest.eps, Some(0.05));
        assert_eq!(manifest.dims, vec![2, 3, 2]);
    }
}

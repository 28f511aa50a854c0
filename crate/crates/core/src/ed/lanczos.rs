//! Lowest eigenvalues of a sector Hamiltonian by Lanczos with full
//! reorthogonalization; small sectors go straight to dense diagonalization.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::hamiltonian::SectorHamiltonian;
use crate::error::{Error, Result};

/// Sectors up to this dimension are diagonalized densely.
pub const DENSE_LIMIT: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    pub n_levels: usize,
    pub rel_tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub max_restarts: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { n_levels: 1, rel_tol: 1e-10, max_iter: 400, seed: 0x5eed, max_restarts: 4 }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn tridiag_eigenvalues(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = t.symmetric_eigen();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(k, k, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

enum Outcome {
    Converged(Vec<f64>),
    Breakdown(Vec<f64>),
}

fn lanczos_run(h: &SectorHamiltonian, start: Vec<f64>, opts: &LanczosOptions) -> Outcome {
    let dim = h.dim;
    let n_levels = opts.n_levels.min(dim);
    let nrm = dot(&start, &start).sqrt();
    let mut q = vec![start.iter().map(|x| x / nrm).collect::<Vec<f64>>()];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut w = vec![0.0; dim];
    let scale = h.norm_bound().max(1.0);
    for j in 0..opts.max_iter.min(dim) {
        h.apply(&q[j], &mut w);
        let a = dot(&q[j], &w);
        alpha.push(a);
        for _ in 0..2 {
            for qi in &q {
                let c = dot(qi, &w);
                w.iter_mut().zip(qi).for_each(|(wk, qk)| *wk -= c * qk);
            }
        }
        let b = dot(&w, &w).sqrt();
        let k = j + 1;
        if k >= n_levels && (k % 5 == 0 || b < 1e-12 * scale) {
            let (vals, vecs) = tridiag_eigenvalues(&alpha, &beta);
            // residual of Ritz pair l is b·|s_{k-1,l}|
            let done = (0..n_levels).all(|l| {
                b * vecs[(k - 1, l)].abs() <= opts.rel_tol * vals[l].abs().max(1e-3 * scale)
            });
            if b < 1e-12 * scale {
                return Outcome::Breakdown(vals[..n_levels.min(vals.len())].to_vec());
            }
            if done {
                return Outcome::Converged(vals[..n_levels].to_vec());
            }
        }
        beta.push(b);
        q.push(w.iter().map(|x| x / b).collect());
    }
    let (vals, _) = tridiag_eigenvalues(&alpha, &beta);
    Outcome::Breakdown(vals[..n_levels.min(vals.len())].to_vec())
}

/// The `opts.n_levels` lowest distinct eigenvalues, ascending.
///
/// An invariant subspace hit before convergence triggers a restart from a new
/// random vector; the union of Ritz values found so far is kept.
pub fn lowest_eigenvalues(h: &SectorHamiltonian, opts: &LanczosOptions) -> Result<Vec<f64>> {
    if h.dim <= DENSE_LIMIT {
        let mut e: Vec<f64> = h.to_dense().symmetric_eigen().eigenvalues.iter().cloned().collect();
        e.sort_by(f64::total_cmp);
        dedup_levels(&mut e);
        e.truncate(opts.n_levels);
        return Ok(e);
    }
    let mut found: Vec<f64> = Vec::new();
    for attempt in 0..=opts.max_restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(attempt as u64));
        let start: Vec<f64> = (0..h.dim).map(|_| rng.gen::<f64>() - 0.5).collect();
        match lanczos_run(h, start, opts) {
            Outcome::Converged(v) => return Ok(v),
            Outcome::Breakdown(v) => found.extend(v),
        }
    }
    found.sort_by(f64::total_cmp);
    dedup_levels(&mut found);
    if found.len() >= opts.n_levels {
        found.truncate(opts.n_levels);
        return Ok(found);
    }
    Err(Error::Numerical(format!("Lanczos failed to converge in sector n_up={}", h.n_up)))
}

fn dedup_levels(e: &mut Vec<f64>) {
    e.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs().max(1.0));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ed::basis::BasisSet;
    use crate::ed::hamiltonian::build_sector;
    use crate::lattice::{build_couplings, CouplingSpec, LatticeGeometry};

    #[test]
    fn lanczos_matches_dense() {
        let cm = build_couplings(LatticeGeometry::rect(4, 3), CouplingSpec::power_law(2.0)).unwrap();
        let basis = BasisSet::new(12).unwrap();
        let h = build_sector(basis.sector(6), &basis, &cm.bonds(), 0.4, u64::MAX).unwrap();
        assert!(h.dim > DENSE_LIMIT);
        let mut dense: Vec<f64> = h.to_dense().symmetric_eigen().eigenvalues.iter().cloned().collect();
        dense.sort_by(f64::total_cmp);
        dedup_levels(&mut dense);
        let opts = LanczosOptions { n_levels: 3, ..Default::default() };
        let got = lowest_eigenvalues(&h, &opts).unwrap();
        for (a, b) in got.iter().zip(&dense) {
            assert!((a - b).abs() <= 1e-9 * b.abs(), "{a} vs {b}");
        }
    }
}

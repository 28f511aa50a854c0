use std::ops::{AddAssign, Mul};

use nalgebra::DMatrix;

use super::basis::{BasisSet, SectorBasis};
use crate::error::{Error, Result};
use crate::lattice::CouplingMatrix;

/// Bytes per stored nonzero (column index plus value) in the CSR layout.
pub const BYTES_PER_NNZ: u64 = 12;

/// Real symmetric sector Hamiltonian in CSR form, diagonal included.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorHamiltonian {
    pub n_up: usize,
    pub dim: usize,
    row_ptr: Vec<usize>,
    col: Vec<u32>,
    val: Vec<f64>,
}

/// Upper bound on the CSR footprint of one sector.
pub fn sector_memory(dim: usize, n_bonds: usize) -> u64 {
    (dim as u64) * (n_bonds as u64 + 1) * BYTES_PER_NNZ + (dim as u64 + 1) * 8
}

/// `H = −Σ_{i<j} 𝒥_ij (S^x S^x + S^y S^y + Δ S^z S^z)` on one sector.
///
/// Diagonal: `−Δ Σ 𝒥_ij s_i s_j` with `s = ±½`; flip-flop elements `−𝒥_ij/2`.
pub fn build_sector(
    sector: &SectorBasis,
    basis: &BasisSet,
    bonds: &[(usize, usize, f64)],
    delta: f64,
    max_bytes: u64,
) -> Result<SectorHamiltonian> {
    let required = sector_memory(sector.dim(), bonds.len());
    if required > max_bytes {
        return Err(Error::Memory {
            what: format!("sector n_up={} (dim {})", sector.n_up, sector.dim()),
            required,
            limit: max_bytes,
        });
    }
    let dim = sector.dim();
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut col = Vec::new();
    let mut val = Vec::new();
    row_ptr.push(0);
    let mut row: Vec<(u32, f64)> = Vec::new();
    for &s in &sector.states {
        row.clear();
        let mut diag = 0.0;
        for &(i, j, c) in bonds {
            let bi = (s >> i) & 1;
            let bj = (s >> j) & 1;
            if bi == bj {
                diag -= 0.25 * delta * c;
            } else {
                diag += 0.25 * delta * c;
                let t = s ^ ((1 << i) | (1 << j));
                row.push((basis.position(t) as u32, -0.5 * c));
            }
        }
        row.push((basis.position(s) as u32, diag));
        row.sort_unstable_by_key(|e| e.0);
        // merge duplicates, e.g. doubled bonds on 2-site-wide tori
        let mut last: Option<u32> = None;
        for &(c, v) in row.iter() {
            if last == Some(c) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(c);
                val.push(v);
                last = Some(c);
            }
        }
        row_ptr.push(col.len());
    }
    Ok(SectorHamiltonian { n_up: sector.n_up, dim, row_ptr, col, val })
}

/// Bonds `(i, j, 𝒥_ij)` with `i < j` and nonzero coupling.
pub fn bonds(cm: &CouplingMatrix) -> Vec<(usize, usize, f64)> {
    cm.bonds()
}

/// All-to-all unit bonds; with `Δ = 1` the Hamiltonian is `−Σ_{i<j} S_i·S_j`.
pub fn uniform_bonds(n: usize) -> Vec<(usize, usize, f64)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, 1.0))).collect()
}

impl SectorHamiltonian {
    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    /// `y = H x`.
    pub fn apply<T>(&self, x: &[T], y: &mut [T])
    where
        T: Copy + Default + AddAssign + Mul<f64, Output = T>,
    {
        for r in 0..self.dim {
            let mut acc = T::default();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += x[self.col[k] as usize] * self.val[k];
            }
            y[r] = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .find(|&k| self.col[k] as usize == r)
                    .map(|k| self.val[k])
                    .unwrap_or(0.0)
            })
            .collect()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.col[k] as usize, self.val[k]))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let d = self.to_dense();
        (0..self.dim).all(|r| (0..self.dim).all(|c| (d[(r, c)] - d[(c, r)]).abs() <= tol))
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_couplings, CouplingSpec, LatticeGeometry};

    fn pair_spectrum(delta: f64) -> Vec<f64> {
        let basis = BasisSet::new(2).unwrap();
        let mut e: Vec<f64> = basis
            .sectors
            .iter()
            .flat_map(|s| {
                let h = build_sector(s, &basis, &[(0, 1, 1.0)], delta, u64::MAX).unwrap();
                h.to_dense().symmetric_eigen().eigenvalues.iter().cloned().collect::<Vec<_>>()
            })
            .collect();
        e.sort_by(f64::total_cmp);
        e
    }

    #[test]
    fn pair_eigenvalues() {
        for delta in [-1.0, 0.0, 0.5, 1.0] {
            let mut expect = vec![-delta / 4.0, -delta / 4.0, -0.5 + delta / 4.0, 0.5 + delta / 4.0];
            expect.sort_by(f64::total_cmp);
            for (a, b) in pair_spectrum(delta).iter().zip(&expect) {
                assert!((a - b).abs() < 1e-14, "delta={delta}");
            }
        }
    }

    #[test]
    fn xy_limit_has_zero_diagonal_and_symmetry() {
        let cm = build_couplings(LatticeGeometry::square(3), CouplingSpec::power_law(3.0)).unwrap();
        let basis = BasisSet::new(9).unwrap();
        let b = bonds(&cm);
        for s in &basis.sectors {
            let h = build_sector(s, &basis, &b, 0.0, u64::MAX).unwrap();
            assert!(h.diagonal().iter().all(|&d| d == 0.0));
            let h = build_sector(s, &basis, &b, 0.7, u64::MAX).unwrap();
            assert!(h.is_symmetric(1e-15));
        }
    }

    #[test]
    fn traceless_over_all_sectors() {
        let cm = build_couplings(LatticeGeometry::square(3), CouplingSpec::nearest_neighbor()).unwrap();
        let basis = BasisSet::new(9).unwrap();
        let b = bonds(&cm);
        let tr: f64 = basis
            .sectors
            .iter()
            .map(|s| build_sector(s, &basis, &b, 0.6, u64::MAX).unwrap().diagonal().iter().sum::<f64>())
            .sum();
        assert!(tr.abs() < 1e-10);
    }

    #[test]
    fn memory_guard_reports_bytes() {
        let basis = BasisSet::new(8).unwrap();
        let err = build_sector(basis.sector(4), &basis, &uniform_bonds(8), 0.5, 1000).unwrap_err();
        match err {
            Error::Memory { required, limit, .. } => {
                assert_eq!(limit, 1000);
                assert_eq!(required, sector_memory(70, 28));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn total_spin_operator() {
        // J² = 3N/4 − 2 H_uniform(Δ=1); the fully polarized state has j = N/2.
        let n = 6;
        let basis = BasisSet::new(n).unwrap();
        let h = build_sector(basis.sector(n), &basis, &uniform_bonds(n), 1.0, u64::MAX).unwrap();
        let j2 = 0.75 * n as f64 - 2.0 * h.diagonal()[0];
        let j = 0.5 * n as f64;
        assert!((j2 - j * (j + 1.0)).abs() < 1e-12);
    }
}

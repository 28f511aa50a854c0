//! Periodic square-lattice geometry, spin-spin coupling matrices and their
//! lattice Fourier transform.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic `lx × ly` lattice; sites are numbered `x + lx * y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeGeometry {
    pub lx: usize,
    pub ly: usize,
}

impl LatticeGeometry {
    pub fn square(l: usize) -> Self {
        Self { lx: l, ly: l }
    }

    pub fn rect(lx: usize, ly: usize) -> Self {
        Self { lx, ly }
    }

    pub fn n_sites(&self) -> usize {
        self.lx * self.ly
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site % self.lx, site / self.lx)
    }

    pub fn site(&self, x: usize, y: usize) -> usize {
        (x % self.lx) + self.lx * (y % self.ly)
    }

    /// Minimum-image displacement `r_j - r_i`, each component in `(-L/2, L/2]`.
    pub fn displacement(&self, i: usize, j: usize) -> (i64, i64) {
        let (xi, yi) = self.coords(i);
        let (xj, yj) = self.coords(j);
        (
            min_image(xj as i64 - xi as i64, self.lx as i64),
            min_image(yj as i64 - yi as i64, self.ly as i64),
        )
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (dx, dy) = self.displacement(i, j);
        ((dx * dx + dy * dy) as f64).sqrt()
    }

    /// Site reached from `site` by the translation `(tx, ty)`.
    pub fn translate(&self, site: usize, tx: usize, ty: usize) -> usize {
        let (x, y) = self.coords(site);
        self.site(x + tx, y + ty)
    }

    fn validate(&self) -> Result<()> {
        if self.lx < 2 || self.ly < 2 {
            return Err(Error::Config(format!(
                "lattice must be at least 2x2, got {}x{}",
                self.lx, self.ly
            )));
        }
        Ok(())
    }
}

fn min_image(d: i64, l: i64) -> i64 {
    let m = d.rem_euclid(l);
    if 2 * m > l {
        m - l
    } else {
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum CouplingFamily {
    NearestNeighbor,
    /// `J / r^alpha`.
    PowerLaw { alpha: f64 },
    /// `J (1 + R_b^6) / (r^6 + R_b^6)`.
    RydbergDressed { blockade_radius: f64 },
    /// Every pair coupled with the same strength `J`; the one-axis-twisting limit.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    #[serde(flatten)]
    pub family: CouplingFamily,
    /// Overall in-plane coupling scale, must be positive (ferromagnetic).
    pub j: f64,
}

impl CouplingSpec {
    pub fn nearest_neighbor() -> Self {
        Self { family: CouplingFamily::NearestNeighbor, j: 1.0 }
    }

    pub fn power_law(alpha: f64) -> Self {
        Self { family: CouplingFamily::PowerLaw { alpha }, j: 1.0 }
    }

    pub fn rydberg(blockade_radius: f64) -> Self {
        Self { family: CouplingFamily::RydbergDressed { blockade_radius }, j: 1.0 }
    }

    pub fn uniform(j: f64) -> Self {
        Self { family: CouplingFamily::Uniform, j }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j > 0.0 && self.j.is_finite()) {
            return Err(Error::Config(format!("coupling scale J must be > 0, got {}", self.j)));
        }
        match self.family {
            CouplingFamily::PowerLaw { alpha } if !(alpha > 0.0 && alpha.is_finite()) => Err(
                Error::Config(format!("power-law exponent must be > 0, got {alpha}")),
            ),
            CouplingFamily::RydbergDressed { blockade_radius }
                if !(blockade_radius >= 0.0 && blockade_radius.is_finite()) =>
            {
                Err(Error::Config(format!(
                    "blockade radius must be >= 0, got {blockade_radius}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Short label used in file names and manifests.
    pub fn label(&self) -> String {
        match self.family {
            CouplingFamily::NearestNeighbor => "nn".into(),
            CouplingFamily::PowerLaw { alpha } => format!("pl{alpha}"),
            CouplingFamily::RydbergDressed { blockade_radius } => format!("ryd{blockade_radius}"),
            CouplingFamily::Uniform => "uniform".into(),
        }
    }
}

/// Dense symmetric coupling matrix `𝒥_ij` with constant row sum `j0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    pub geometry: LatticeGeometry,
    pub spec: CouplingSpec,
    values: Vec<f64>,
    pub j0: f64,
}

/// Builds `𝒥_ij` with minimum-image distances on the torus.
///
/// Nearest-neighbor bonds are counted once per unit displacement vector, so a
/// 2-site-wide direction doubles its bond and every row still sums to `4J`.
pub fn build_couplings(geometry: LatticeGeometry, spec: CouplingSpec) -> Result<CouplingMatrix> {
    geometry.validate()?;
    spec.validate()?;
    let n = geometry.n_sites();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            values[i * n + j] = match spec.family {
                CouplingFamily::NearestNeighbor => {
                    let (xi, yi) = geometry.coords(i);
                    let steps = [
                        geometry.site(xi + 1, yi),
                        geometry.site(xi + geometry.lx - 1, yi),
                        geometry.site(xi, yi + 1),
                        geometry.site(xi, yi + geometry.ly - 1),
                    ];
                    spec.j * steps.iter().filter(|&&s| s == j).count() as f64
                }
                CouplingFamily::PowerLaw { alpha } => spec.j / geometry.distance(i, j).powf(alpha),
                CouplingFamily::RydbergDressed { blockade_radius } => {
                    let rb6 = blockade_radius.powi(6);
                    spec.j * (1.0 + rb6) / (geometry.distance(i, j).powi(6) + rb6)
                }
                CouplingFamily::Uniform => spec.j,
            };
        }
    }
    let j0 = values[..n].iter().sum();
    Ok(CouplingMatrix { geometry, spec, values, j0 })
}

impl CouplingMatrix {
    pub fn n_sites(&self) -> usize {
        self.geometry.n_sites()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_sites() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n_sites();
        &self.values[i * n..(i + 1) * n]
    }

    /// Non-zero pairs `(i, j, 𝒥_ij)` with `i < j`.
    pub fn bonds(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n_sites();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let v = self.get(i, j);
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    /// Per-site lists of `(neighbor, 𝒥_ij)` over the non-zero entries.
    pub fn neighbor_lists(&self) -> Vec<Vec<(usize, f64)>> {
        let n = self.n_sites();
        (0..n)
            .map(|i| {
                (0..n)
                    .filter_map(|j| {
                        let v = self.get(i, j);
                        (v != 0.0).then_some((j, v))
                    })
                    .collect()
            })
            .collect()
    }

    /// `Σ_{i<j} 𝒥_ij`.
    pub fn pair_sum(&self) -> f64 {
        self.bonds().iter().map(|b| b.2).sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.n_sites();
        (0..n).all(|i| (0..n).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// True when `𝒥` is unchanged by unit lattice translations.
    pub fn is_translation_invariant(&self, tol: f64) -> bool {
        let g = self.geometry;
        let n = self.n_sites();
        [(1, 0), (0, 1)].iter().all(|&(tx, ty)| {
            (0..n).all(|i| {
                let ti = g.translate(i, tx, ty);
                (0..n).all(|j| (self.get(i, j) - self.get(ti, g.translate(j, tx, ty))).abs() <= tol)
            })
        })
    }

    /// True when the matrix is invariant under the site permutation `perm`.
    pub fn is_invariant_under(&self, perm: &[usize], tol: f64) -> bool {
        let n = self.n_sites();
        (0..n).all(|i| (0..n).all(|j| (self.get(i, j) - self.get(perm[i], perm[j])).abs() <= tol))
    }

    /// Debug dump: one CSV row per site.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.n_sites();
        for i in 0..n {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Lattice wavevectors `k = 2π (n_x/L_x, n_y/L_y)` with `J_k`; index 0 is `k = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    pub geometry: LatticeGeometry,
    pub k: Vec<[f64; 2]>,
    pub jk: Vec<f64>,
}

impl MomentumGrid {
    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    pub fn j0(&self) -> f64 {
        self.jk[0]
    }
}

/// `J_k = (1/N) Σ_ij e^{ik·(r_i − r_j)} 𝒥_ij`, evaluated from the first row.
pub fn fourier_coupling(cm: &CouplingMatrix) -> Result<MomentumGrid> {
    if !cm.is_translation_invariant(1e-12 * cm.j0.abs().max(1.0)) {
        return Err(Error::Numerical(
            "coupling matrix is not translation invariant".into(),
        ));
    }
    let g = cm.geometry;
    let n = g.n_sites();
    let mut k = Vec::with_capacity(n);
    let mut jk = Vec::with_capacity(n);
    for ny in 0..g.ly {
        for nx in 0..g.lx {
            let kv = [2.0 * PI * nx as f64 / g.lx as f64, 2.0 * PI * ny as f64 / g.ly as f64];
            let mut re = 0.0;
            let mut im = 0.0;
            for j in 0..n {
                let (x, y) = g.coords(j);
                let phase = kv[0] * x as f64 + kv[1] * y as f64;
                re += cm.get(0, j) * phase.cos();
                im += cm.get(0, j) * phase.sin();
            }
            if im.abs() > 1e-9 * cm.j0.abs().max(1.0) {
                return Err(Error::Numerical(format!(
                    "J_k has imaginary part {im:.3e} at k = ({:.4}, {:.4})",
                    kv[0], kv[1]
                )));
            }
            k.push(kv);
            jk.push(re);
        }
    }
    Ok(MomentumGrid { geometry: g, k, jk })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_image_range() {
        for l in 2..9i64 {
            for d in -20..20 {
                let m = min_image(d, l);
                assert!(2 * m > -l && 2 * m <= l, "d={d} l={l} m={m}");
                assert_eq!((m - d).rem_euclid(l), 0);
            }
        }
    }

    #[test]
    fn nn_rows_sum_to_four() {
        for l in [2, 3, 4, 5, 6] {
            let cm = build_couplings(LatticeGeometry::square(l), CouplingSpec::nearest_neighbor()).unwrap();
            for i in 0..cm.n_sites() {
                assert!((cm.row(i).iter().sum::<f64>() - 4.0).abs() < 1e-14);
            }
            assert_eq!(cm.j0, 4.0);
        }
    }

    #[test]
    fn rydberg_nearest_bond_equals_j() {
        let cm = build_couplings(LatticeGeometry::square(4), CouplingSpec::rydberg(1.5)).unwrap();
        assert_eq!(cm.get(0, 1), 1.0);
        assert!((cm.j0 - 7.27).abs() < 0.01, "J0 = {}", cm.j0);
    }

    #[test]
    fn rydberg_j0_matches_direct_displacement_sum() {
        // Independent enumeration over the 15 minimum-image displacement vectors of a 4x4 torus.
        let rb: f64 = 1.5;
        let rb6 = rb.powi(6);
        let mut sum = 0.0;
        for dx in -1i32..=2 {
            for dy in -1i32..=2 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let r2 = (dx * dx + dy * dy) as f64;
                sum += (1.0 + rb6) / (r2.powi(3) + rb6);
            }
        }
        let cm = build_couplings(LatticeGeometry::square(4), CouplingSpec::rydberg(rb)).unwrap();
        assert!((cm.j0 - sum).abs() < 1e-12);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let g = LatticeGeometry::square(4);
        assert!(matches!(build_couplings(g, CouplingSpec::power_law(0.0)), Err(Error::Config(_))));
        assert!(matches!(build_couplings(g, CouplingSpec::rydberg(-1.0)), Err(Error::Config(_))));
        let bad_j = CouplingSpec { family: CouplingFamily::NearestNeighbor, j: -1.0 };
        assert!(matches!(build_couplings(g, bad_j), Err(Error::Config(_))));
        assert!(matches!(
            build_couplings(LatticeGeometry::square(1), CouplingSpec::nearest_neighbor()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn nn_fourier_is_cosine_sum() {
        for l in [3, 4, 6] {
            let cm = build_couplings(LatticeGeometry::square(l), CouplingSpec::nearest_neighbor()).unwrap();
            let grid = fourier_coupling(&cm).unwrap();
            for (k, jk) in grid.k.iter().zip(&grid.jk) {
                let expect = 2.0 * (k[0].cos() + k[1].cos());
                assert!((jk - expect).abs() < 1e-12);
            }
            assert_eq!(grid.j0(), cm.j0);
        }
    }

    #[test]
    fn fourier_rejects_non_translation_invariant() {
        let mut cm = build_couplings(LatticeGeometry::square(4), CouplingSpec::nearest_neighbor()).unwrap();
        cm.values[1] = 3.0;
        let n = cm.n_sites();
        cm.values[n] = 3.0;
        assert!(matches!(fourier_coupling(&cm), Err(Error::Numerical(_))));
    }

    #[test]
    fn large_alpha_power_law_approaches_nn() {
        let g = LatticeGeometry::square(6);
        let pl = build_couplings(g, CouplingSpec::power_law(50.0)).unwrap();
        let nn = build_couplings(g, CouplingSpec::nearest_neighbor()).unwrap();
        for i in 0..g.n_sites() {
            for j in 0..g.n_sites() {
                assert!((pl.get(i, j) - nn.get(i, j)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn csv_dump_has_one_row_per_site() {
        let cm = build_couplings(LatticeGeometry::square(3), CouplingSpec::nearest_neighbor()).unwrap();
        let mut buf = Vec::new();
        cm.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert_eq!(text.lines().next().unwrap().split(',').count(), 9);
    }
}

//! Canonical ensemble from the full spectrum: `E(T)`, `T_CSS`, and the
//! thermal `Var(J^x)/N`.
//!
//! Each sector is split into real symmetry blocks (see [`super::symmetry`])
//! and diagonalized densely. Sectors `J^z` and `−J^z` are related by the spin
//! flip, so only `J^z ≥ 0` is computed and the rest is counted twice.

use serde::{Deserialize, Serialize};

use super::basis::BasisSet;
use super::hamiltonian::{build_sector, uniform_bonds, SectorHamiltonian};
use super::symmetry::{block_reps, sector_orbits, symmetrize, InvolutionGroup, SectorOrbits};
use crate::error::{Error, Result};
use crate::lattice::CouplingMatrix;
use crate::par::Exec;

pub const T_BRACKET: [f64; 2] = [1e-3, 1e3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalLevel {
    pub energy: f64,
    pub jz: f64,
    /// `⟨n|J²|n⟩`, when requested.
    pub j2: f64,
    /// Multiplicity from the `±J^z` mirror.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalSpectrum {
    pub n: usize,
    pub levels: Vec<ThermalLevel>,
    pub ground: f64,
    pub has_j2: bool,
}

/// Largest dense block that the solver will diagonalize.
pub const MAX_BLOCK: usize = 6000;

pub fn thermal_spectrum(
    cm: &CouplingMatrix,
    delta: f64,
    with_j2: bool,
    max_bytes: u64,
    exec: Exec,
) -> Result<ThermalSpectrum> {
    let n = cm.n_sites();
    let basis = BasisSet::new(n)?;
    let bonds = cm.bonds();
    let ubonds = uniform_bonds(n);
    let sectors: Vec<usize> = (n.div_ceil(2)..=n).collect();
    let plain = InvolutionGroup::for_couplings(cm, false);
    let flipped = InvolutionGroup::for_couplings(cm, true);
    struct Prepared {
        n_up: usize,
        h: SectorHamiltonian,
        hu: Option<SectorHamiltonian>,
        orbits: SectorOrbits,
        group: usize,
    }
    let prepared = exec
        .map(&sectors, |&n_up| -> Result<Prepared> {
            let sec = basis.sector(n_up);
            let zero = 2 * n_up == n;
            let group = if zero { &flipped } else { &plain };
            let h = build_sector(sec, &basis, &bonds, delta, max_bytes)?;
            let hu = if with_j2 { Some(build_sector(sec, &basis, &ubonds, 1.0, max_bytes)?) } else { None };
            Ok(Prepared { n_up, h, hu, orbits: sector_orbits(group, sec, &basis), group: zero as usize })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let groups = [&plain, &flipped];
    let tasks: Vec<(usize, usize)> = prepared
        .iter()
        .enumerate()
        .flat_map(|(i, p)| (0..groups[p.group].order()).map(move |q| (i, q)))
        .collect();
    let blocks = exec.map(&tasks, |&(i, q)| -> Result<Vec<ThermalLevel>> {
        let p = &prepared[i];
        let reps = block_reps(&p.orbits, q);
        if reps.is_empty() {
            return Ok(Vec::new());
        }
        if reps.len() > MAX_BLOCK {
            return Err(Error::Memory {
                what: format!("dense symmetry block of dimension {}", reps.len()),
                required: (reps.len() * reps.len() * 16) as u64,
                limit: (MAX_BLOCK * MAX_BLOCK * 16) as u64,
            });
        }
        let m = symmetrize(&p.h, &p.orbits, &reps, q);
        let jz = p.n_up as f64 - 0.5 * n as f64;
        let weight = if jz == 0.0 { 1.0 } else { 2.0 };
        let j2: Vec<f64> = match &p.hu {
            Some(hu) => {
                let eig = m.symmetric_eigen();
                let mu = symmetrize(hu, &p.orbits, &reps, q);
                let rot = &mu * &eig.eigenvectors;
                let diag: Vec<f64> = (0..reps.len())
                    .map(|k| eig.eigenvectors.column(k).dot(&rot.column(k)))
                    .collect();
                let levels = eig
                    .eigenvalues
                    .iter()
                    .zip(diag)
                    .map(|(&e, d)| ThermalLevel { energy: e, jz, j2: 0.75 * n as f64 - 2.0 * d, weight })
                    .collect();
                return Ok(levels);
            }
            None => vec![f64::NAN; reps.len()],
        };
        let e = nalgebra::SymmetricEigen::new(m).eigenvalues;
        Ok(e.iter().zip(j2).map(|(&e, j2)| ThermalLevel { energy: e, jz, j2, weight }).collect())
    });
    let mut levels = Vec::with_capacity(1 << n);
    for b in blocks {
        levels.extend(b?);
    }
    let ground = levels.iter().map(|l| l.energy).fold(f64::INFINITY, f64::min);
    Ok(ThermalSpectrum { n, levels, ground, has_j2: with_j2 })
}

impl ThermalSpectrum {
    /// Number of states counted with mirror weights.
    pub fn dimension(&self) -> f64 {
        self.levels.iter().map(|l| l.weight).sum()
    }

    fn boltzmann(&self, t: f64) -> impl Iterator<Item = (f64, &ThermalLevel)> + '_ {
        self.levels.iter().map(move |l| (l.weight * (-(l.energy - self.ground) / t).exp(), l))
    }

    pub fn energy(&self, t: f64) -> f64 {
        let (z, e) = self
            .boltzmann(t)
            .fold((0.0, 0.0), |(z, e), (w, l)| (z + w, e + w * l.energy));
        e / z
    }

    /// `Var(J^x)/N = ½(⟨J²⟩ − ⟨(J^z)²⟩)/N`, using `⟨J^x⟩ = 0` and U(1) symmetry.
    pub fn var_jx_per_spin(&self, t: f64) -> Result<f64> {
        if !self.has_j2 {
            return Err(Error::Config("spectrum computed without J^2 expectations".into()));
        }
        let (z, j2, jz2) = self.boltzmann(t).fold((0.0, 0.0, 0.0), |(z, a, b), (w, l)| {
            (z + w, a + w * l.j2, b + w * l.jz * l.jz)
        });
        Ok(0.5 * (j2 - jz2) / z / self.n as f64)
    }

    /// Temperature with `E(T) = target`, by bisection in `ln T` on [`T_BRACKET`].
    pub fn temperature_for_energy(&self, target: f64, rel_tol: f64) -> Result<f64> {
        if target < self.ground {
            return Err(Error::Config(format!(
                "target energy {target} lies below the ground energy {}",
                self.ground
            )));
        }
        let (mut lo, mut hi) = (T_BRACKET[0], T_BRACKET[1]);
        if self.energy(lo) > target || self.energy(hi) < target {
            return Err(Error::Numerical(format!(
                "energy {target} not bracketed by T in [{lo}, {hi}]"
            )));
        }
        while (hi - lo) > rel_tol * lo {
            let mid = (lo * hi).sqrt();
            if self.energy(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo * hi).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalResult {
    pub ground_energy: f64,
    pub css_energy: f64,
    pub t_css: f64,
    pub var_jx_per_spin: Option<f64>,
}

/// `T_CSS` from `E(T_CSS) = ⟨CSS|H|CSS⟩ = −N J0/8`, plus the thermal
/// `Var(J^x)/N` there when requested.
pub fn thermal_solve(cm: &CouplingMatrix, delta: f64, with_var: bool, max_bytes: u64, exec: Exec) -> Result<ThermalResult> {
    let spec = thermal_spectrum(cm, delta, with_var, max_bytes, exec)?;
    let css_energy = -(cm.n_sites() as f64) * cm.j0 / 8.0;
    let t_css = spec.temperature_for_energy(css_energy, 1e-6)?;
    let var = if with_var { Some(spec.var_jx_per_spin(t_css)?) } else { None };
    Ok(ThermalResult { ground_energy: spec.ground, css_energy, t_css, var_jx_per_spin: var })
}

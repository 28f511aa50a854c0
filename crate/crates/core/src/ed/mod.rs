//! Exact diagonalization in `J^z` sectors: quench dynamics, tower of states,
//! thermal observables.

pub mod basis;
pub mod hamiltonian;
pub mod krylov;
pub mod lanczos;
pub mod measure;
pub mod state;
pub mod symmetry;
pub mod thermal;

use serde::{Deserialize, Serialize};

use crate::collective::{squeezing_parameter, CollectiveMoments, SeriesMeta, TimeSeries};
use crate::error::{Error, Result};
use crate::lattice::CouplingMatrix;
use crate::par::Exec;

pub use basis::{BasisSet, SectorBasis};
pub use hamiltonian::{build_sector, SectorHamiltonian};
pub use krylov::KrylovOptions;
pub use lanczos::LanczosOptions;
pub use measure::measure_collective;
pub use state::{css_state, SectorState};

/// Default memory budget for sector Hamiltonians, 4 GiB.
pub const DEFAULT_MAX_BYTES: u64 = 4 << 30;

/// Sector Hamiltonians of one model, all `N + 1` sectors.
#[derive(Debug, Clone)]
pub struct EdSystem {
    pub basis: BasisSet,
    pub hams: Vec<SectorHamiltonian>,
    pub delta: f64,
}

impl EdSystem {
    pub fn new(cm: &CouplingMatrix, delta: f64, max_bytes: u64, exec: Exec) -> Result<Self> {
        Self::from_bonds(cm.n_sites(), &cm.bonds(), delta, max_bytes, exec)
    }

    pub fn from_bonds(
        n: usize,
        bonds: &[(usize, usize, f64)],
        delta: f64,
        max_bytes: u64,
        exec: Exec,
    ) -> Result<Self> {
        let nnz = bonds.len() as f64 + 1.0;
        let total_f = 2f64.powi(n as i32) * (4.0 + 8.0 + nnz * hamiltonian::BYTES_PER_NNZ as f64) + 8.0 * (n + 1) as f64;
        let total = if total_f >= u64::MAX as f64 { u64::MAX } else { total_f as u64 };
        if total > max_bytes {
            return Err(Error::Memory { what: format!("ED Hamiltonian for N={n}"), required: total, limit: max_bytes });
        }
        let basis = BasisSet::new(n)?;
        let hams = exec
            .map(&basis.sectors, |s| build_sector(s, &basis, bonds, delta, max_bytes))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { basis, hams, delta })
    }

    pub fn n(&self) -> usize {
        self.basis.n
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuenchOptions {
    pub krylov: KrylovOptions,
    /// Longest single Krylov step.
    pub max_step: f64,
}

impl Default for QuenchOptions {
    fn default() -> Self {
        Self { krylov: KrylovOptions::default(), max_step: 0.25 }
    }
}

/// Conservation diagnostics over a run (maxima over output times).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Conservation {
    pub norm_error: f64,
    pub energy_rel_error: f64,
    pub sector_weight_error: f64,
    pub initial_energy: f64,
}

#[derive(Debug, Clone)]
pub struct EdRun {
    pub series: TimeSeries,
    pub moments: Vec<CollectiveMoments>,
    pub conservation: Conservation,
}

/// Evolves `state` to time `t` in place.
pub fn evolve(state: &mut SectorState, sys: &EdSystem, t: f64, opts: &QuenchOptions, exec: Exec) -> Result<()> {
    let dt = t - state.t;
    if dt < 0.0 {
        return Err(Error::Config("ED evolution cannot run backwards".into()));
    }
    let mut results: Vec<Result<()>> = state.blocks.iter().map(|_| Ok(())).collect();
    let mut pairs: Vec<(&mut Vec<num_complex::Complex64>, &mut Result<()>)> =
        state.blocks.iter_mut().zip(results.iter_mut()).collect();
    exec.for_each_mut(&mut pairs, |k, (block, res)| {
        **res = krylov::evolve_vector(&sys.hams[k], block, dt, opts.max_step, &opts.krylov);
    });
    drop(pairs);
    results.into_iter().collect::<Result<()>>()?;
    state.t = t;
    Ok(())
}

/// Quench from the x-polarized CSS, measuring at every grid time.
pub fn ed_quench(sys: &EdSystem, t_grid: &[f64], opts: &QuenchOptions, exec: Exec) -> Result<EdRun> {
    if t_grid.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::Config("time grid must be non-negative".into()));
    }
    let mut state = css_state(&sys.basis);
    let w0 = state.sector_weights();
    let e0 = state.energy(&sys.hams);
    let mut cons = Conservation { initial_energy: e0, ..Default::default() };
    let mut moments = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        evolve(&mut state, sys, t, opts, exec)?;
        let w = state.sector_weights();
        cons.sector_weight_error =
            w.iter().zip(&w0).map(|(a, b)| (a - b).abs()).fold(cons.sector_weight_error, f64::max);
        cons.norm_error = cons.norm_error.max((w.iter().sum::<f64>() - 1.0).abs());
        let e = state.energy(&sys.hams);
        cons.energy_rel_error = cons.energy_rel_error.max((e - e0).abs() / e0.abs().max(f64::MIN_POSITIVE));
        moments.push(measure_collective(&state, &sys.basis, exec));
    }
    let mut series = TimeSeries::new(SeriesMeta {
        model: format!("delta={}", sys.delta),
        solver: "ed".into(),
        n: sys.n(),
        ..Default::default()
    });
    series.points = moments.iter().map(squeezing_parameter).collect::<Result<_>>()?;
    Ok(EdRun { series, moments, conservation: cons })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerLevel {
    pub jz: f64,
    /// Lowest distinct energies of the sector, ascending.
    pub energies: Vec<f64>,
}

/// Lowest `n_levels` energies per `J^z` sector.
pub fn tower_energies(sys: &EdSystem, n_levels: usize, exec: Exec) -> Result<Vec<TowerLevel>> {
    let opts = LanczosOptions { n_levels, ..Default::default() };
    exec.map(&sys.hams, |h| {
        lanczos::lowest_eigenvalues(h, &opts)
            .map(|energies| TowerLevel { jz: sys.basis.sector(h.n_up).sz(), energies })
    })
    .into_iter()
    .collect()
}

/// `(Jz, E_min)` pairs for `|Jz| ≤ max_jz`, the input of the tower fit.
pub fn tower_points(levels: &[TowerLevel], max_jz: f64) -> Vec<(f64, f64)> {
    levels
        .iter()
        .filter(|l| l.jz.abs() <= max_jz + 1e-9)
        .map(|l| (l.jz, l.energies[0]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_couplings, CouplingSpec, LatticeGeometry};
    use crate::rotor::{evolve_ladder, ladder_moments, LadderState, RotorModel};

    #[test]
    fn pair_magnetization_matches_hand_solution() {
        // Two spins, 𝒥 = 1: the triplet m=0 component of |→→⟩ acquires the
        // phase of E(T0) − E(T±) = −½ + Δ/4 − (−Δ/4) = −½ + Δ/2, so
        // ⟨J^x⟩ = cos((1 − Δ) t / 2).
        let delta = 0.5;
        let sys = EdSystem::from_bonds(2, &[(0, 1, 1.0)], delta, u64::MAX, Exec::Sequential).unwrap();
        let ts: Vec<f64> = (0..40).map(|k| 0.37 * k as f64).collect();
        let run = ed_quench(&sys, &ts, &QuenchOptions::default(), Exec::Sequential).unwrap();
        for (m, &t) in run.moments.iter().zip(&ts) {
            assert!((m.mean[0] - (0.5 * (1.0 - delta) * t).cos()).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn all_to_all_matches_ladder() {
        // H = −χ'Σ_{i<j}(…) with uniform 𝒥 reduces to χ (J^z)² + const,
        // χ = 𝒥(1 − Δ)/2, on the Dicke manifold.
        for n in [4, 7, 10] {
            let g = 0.3;
            let delta = 0.2;
            let bonds: Vec<_> = hamiltonian::uniform_bonds(n).into_iter().map(|(i, j, _)| (i, j, g)).collect();
            let sys = EdSystem::from_bonds(n, &bonds, delta, u64::MAX, Exec::default()).unwrap();
            let ts: Vec<f64> = (0..25).map(|k| 0.4 * k as f64).collect();
            let run = ed_quench(&sys, &ts, &QuenchOptions::default(), Exec::default()).unwrap();
            let rotor = RotorModel::new(n, g * (1.0 - delta) / 2.0).unwrap();
            let s0 = LadderState::coherent_x(n);
            for (m, &t) in run.moments.iter().zip(&ts) {
                let l = ladder_moments(&evolve_ladder(&s0, &rotor, t), t);
                for a in 0..3 {
                    assert!((m.mean[a] - l.mean[a]).abs() < 1e-9);
                    for b in 0..3 {
                        assert!((m.second[a][b] - l.second[a][b]).abs() < 1e-9, "n={n} t={t}");
                    }
                }
            }
        }
    }

    #[test]
    fn conservation_and_symmetry_on_small_lattice() {
        let cm = build_couplings(LatticeGeometry::rect(3, 3), CouplingSpec::nearest_neighbor()).unwrap();
        let sys = EdSystem::new(&cm, 0.5, DEFAULT_MAX_BYTES, Exec::default()).unwrap();
        let ts: Vec<f64> = (0..30).map(|k| 0.2 * k as f64).collect();
        let run = ed_quench(&sys, &ts, &QuenchOptions::default(), Exec::default()).unwrap();
        let c = run.conservation;
        assert!(c.norm_error < 1e-10 && c.sector_weight_error < 1e-12 && c.energy_rel_error < 1e-8, "{c:?}");
        for m in &run.moments {
            assert!(m.mean[1].abs() < 1e-10 && m.mean[2].abs() < 1e-10);
            let total: f64 = (0..3).map(|a| m.variance(a)).sum();
            assert!(total >= 0.5 * 9.0 - 1e-10);
        }
    }

    #[test]
    fn polarized_sector_energy() {
        let cm = build_couplings(LatticeGeometry::square(3), CouplingSpec::power_law(3.0)).unwrap();
        let delta = 0.3;
        let sys = EdSystem::new(&cm, delta, DEFAULT_MAX_BYTES, Exec::default()).unwrap();
        let tower = tower_energies(&sys, 1, Exec::default()).unwrap();
        let expect = -delta * cm.pair_sum() / 4.0;
        assert!((tower[0].energies[0] - expect).abs() < 1e-12);
        assert!((tower[9].energies[0] - expect).abs() < 1e-12);
        for k in 0..=9 {
            assert!((tower[k].energies[0] - tower[9 - k].energies[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn memory_guard_is_global() {
        let cm = build_couplings(LatticeGeometry::square(4), CouplingSpec::nearest_neighbor()).unwrap();
        assert!(matches!(EdSystem::new(&cm, 0.5, 1 << 20, Exec::default()), Err(Error::Memory { .. })));
        let big = build_couplings(LatticeGeometry::square(8), CouplingSpec::nearest_neighbor()).unwrap();
        assert!(matches!(EdSystem::new(&big, 0.5, DEFAULT_MAX_BYTES, Exec::default()), Err(Error::Memory { .. })));
    }
}

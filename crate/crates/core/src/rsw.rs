//! Rotor/spin-wave theory: the zero-momentum rotor (OAT with twisting rate
//! `1/(2I)`) plus free Bogoliubov spin waves at `k ≠ 0`.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::collective::{squeezing_parameter, SeriesMeta, TimeSeries};
use crate::error::{Error, Result};
use crate::lattice::{fourier_coupling, CouplingMatrix};
use crate::par::Exec;
use crate::rotor::{OatDynamics, RotorModel};

/// Frequencies below this are treated as zero modes in the occupation law.
pub const OMEGA_FLOOR: f64 = 1e-12;

/// Bare twisting rate `χ = J0 (1 − Δ) / (2 (N − 1))`.
pub fn bare_inertia(cm: &CouplingMatrix, delta: f64) -> RotorModel {
    let n = cm.n_sites();
    RotorModel { n, chi: cm.j0 * (1.0 - delta) / (2.0 * (n as f64 - 1.0)) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinWaveMode {
    pub k: [f64; 2],
    pub jk: f64,
    pub a: f64,
    pub b: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinWaveSet {
    pub modes: Vec<SpinWaveMode>,
    pub rotor: RotorModel,
    pub delta: f64,
    pub j0: f64,
}

/// Bogoliubov data for every `k ≠ 0`:
/// `A_k = ½[J0 − ½J_k(1+Δ)]`, `B_k = −¼J_k(1−Δ)`, `ω_k = √(A_k² − B_k²)`.
///
/// The rotor defaults to the bare twisting rate; see [`SpinWaveSet::with_rotor`].
pub fn dispersion(cm: &CouplingMatrix, delta: f64) -> Result<SpinWaveSet> {
    let grid = fourier_coupling(cm)?;
    let j0 = grid.j0();
    let tol = 1e-12 * j0.abs().max(1.0).powi(2);
    let mut modes = Vec::with_capacity(grid.len() - 1);
    for (k, &jk) in grid.k.iter().zip(&grid.jk).skip(1) {
        let a = 0.5 * (j0 - 0.5 * jk * (1.0 + delta));
        let b = -0.25 * jk * (1.0 - delta);
        let w2 = a * a - b * b;
        if w2 < -tol {
            return Err(Error::Numerical(format!(
                "unstable spin-wave mode at k = ({:.4}, {:.4}): omega^2 = {w2:.3e}",
                k[0], k[1]
            )));
        }
        modes.push(SpinWaveMode { k: *k, jk, a, b, omega: w2.max(0.0).sqrt() });
    }
    Ok(SpinWaveSet { modes, rotor: bare_inertia(cm, delta), delta, j0 })
}

impl SpinWaveSet {
    pub fn with_rotor(mut self, rotor: RotorModel) -> Self {
        self.rotor = rotor;
        self
    }

    pub fn n(&self) -> usize {
        self.rotor.n
    }

    /// Upper bound `(1/N) Σ_k (B_k/ω_k)²` over non-zero modes.
    pub fn max_density(&self) -> f64 {
        self.modes
            .iter()
            .filter(|m| m.omega >= OMEGA_FLOOR)
            .map(|m| (m.b / m.omega).powi(2))
            .sum::<f64>()
            / self.n() as f64
    }

    pub fn lowest_mode(&self) -> Option<&SpinWaveMode> {
        self.modes.iter().min_by(|a, b| a.omega.total_cmp(&b.omega))
    }
}

/// `n_SW(t) = (1/N) Σ_{k≠0} (B_k/ω_k)² sin²(ω_k t)`, with the `B_k² t²`
/// limit for zero modes.
pub fn spin_wave_density(sw: &SpinWaveSet, t: f64) -> f64 {
    let s: f64 = sw
        .modes
        .iter()
        .map(|m| {
            if m.omega < OMEGA_FLOOR {
                m.b * m.b * t * t
            } else {
                (m.b / m.omega * (m.omega * t).sin()).powi(2)
            }
        })
        .sum();
    s / sw.n() as f64
}

/// Quench from the CSS: rotor moments with `m^x = ⟨K^x⟩/N − n_SW`.
pub fn rsw_quench(sw: &SpinWaveSet, t_grid: &[f64], exec: Exec) -> Result<TimeSeries> {
    let rotor = OatDynamics::new(sw.rotor);
    let n = sw.n() as f64;
    let points = exec.map(t_grid, |&t| {
        let mut m = rotor.moments(t);
        let n_sw = spin_wave_density(sw, t);
        let cov = m.covariance();
        m.mean[0] -= n * n_sw;
        for a in 0..3 {
            for b in 0..3 {
                m.second[a][b] = cov[a][b] + m.mean[a] * m.mean[b];
            }
        }
        squeezing_parameter(&m).map(|mut p| {
            p.n_sw = Some(n_sw);
            p
        })
    });
    let points = points.into_iter().collect::<Result<Vec<_>>>()?;
    if let Some(p) = points.iter().find(|p| p.n_sw.unwrap_or(0.0) > 0.5) {
        warn!("spin-wave density large: RSW uncontrolled (n_sw = {:.3} at t = {})", p.n_sw.unwrap(), p.t);
    }
    let mut ts = TimeSeries::new(SeriesMeta {
        model: format!("delta={} chi={}", sw.delta, sw.rotor.chi),
        solver: "rsw".into(),
        n: sw.n(),
        ..Default::default()
    });
    ts.points = points;
    Ok(ts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TosFit {
    pub chi: f64,
    pub e0: f64,
    /// Largest absolute residual of the quadratic fit.
    pub max_residual: f64,
    pub sectors: Vec<f64>,
    pub quadratic: bool,
}

impl TosFit {
    pub fn rotor(&self, n: usize) -> RotorModel {
        RotorModel { n, chi: self.chi }
    }
}

/// Least-squares fit `E(Jz) = E0 + χ Jz²` over the supplied sectors.
///
/// Flags the fit as not quadratic when the residuals exceed 2% of the tower's
/// energy range.
pub fn tos_fit(sector_energies: &[(f64, f64)]) -> Result<TosFit> {
    if sector_energies.len() < 4 || !sector_energies.iter().any(|&(jz, _)| jz == 0.0) {
        return Err(Error::InsufficientData(
            "tower fit needs at least 4 sectors including Jz = 0".into(),
        ));
    }
    let xs: Vec<f64> = sector_energies.iter().map(|&(jz, _)| jz * jz).collect();
    let ys: Vec<f64> = sector_energies.iter().map(|&(_, e)| e).collect();
    let line = crate::analysis::linear_fit(&xs, &ys)?;
    let (chi, e0) = (line.slope, line.intercept);
    let max_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - e0 - chi * x).abs())
        .fold(0.0, f64::max);
    let range = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let quadratic = max_residual <= 0.02 * range.max(f64::MIN_POSITIVE);
    if !quadratic {
        warn!("ToS not quadratic: max residual {max_residual:.3e} over range {range:.3e}");
    }
    Ok(TosFit {
        chi,
        e0,
        max_residual,
        sectors: sector_energies.iter().map(|&(jz, _)| jz).collect(),
        quadratic,
    })
}

/// `χ_{N'} = χ_N · [J0' / (N'−1)] · [(N−1) / J0]`.
pub fn rescale_inertia(chi_n: f64, cm_n: &CouplingMatrix, cm_target: &CouplingMatrix) -> Result<f64> {
    if cm_n.spec != cm_target.spec {
        return Err(Error::Config("inertia rescaling needs the same coupling family".into()));
    }
    let n = cm_n.n_sites() as f64;
    let n2 = cm_target.n_sites() as f64;
    Ok(chi_n * (cm_target.j0 / (n2 - 1.0)) * ((n - 1.0) / cm_n.j0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumLevel {
    pub jz: f64,
    /// Total number of spin-wave quanta.
    pub n_sw: usize,
    /// Mode indices of the occupied quanta (with repetition).
    pub occupation: Vec<usize>,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RswSpectrum {
    pub e0: f64,
    pub levels: Vec<SpectrumLevel>,
}

impl RswSpectrum {
    /// Lowest level in sector `jz` carrying exactly `n_sw` quanta.
    pub fn lowest(&self, jz: f64, n_sw: usize) -> Option<f64> {
        self.levels.iter().find(|l| l.jz == jz && l.n_sw == n_sw).map(|l| l.energy)
    }
}

/// `E = E0 + χ Jz² + Σ ω_k n_k` for `|Jz| ≤ max_jz` and up to `max_sw` quanta.
pub fn rsw_spectrum(sw: &SpinWaveSet, e0: f64, max_jz: f64, max_sw: usize) -> RswSpectrum {
    let half = 0.5 * (sw.n() % 2) as f64;
    let mut occupations: Vec<Vec<usize>> = vec![vec![]];
    let mut frontier: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..max_sw {
        let mut next = Vec::new();
        for occ in &frontier {
            let start = occ.last().copied().unwrap_or(0);
            for k in start..sw.modes.len() {
                let mut o = occ.clone();
                o.push(k);
                next.push(o);
            }
        }
        occupations.extend(next.iter().cloned());
        frontier = next;
    }
    let mut levels = Vec::new();
    let mut jz = -max_jz.floor() - half;
    if jz < -max_jz {
        jz += 1.0;
    }
    while jz <= max_jz + 1e-12 {
        for occ in &occupations {
            let e = e0 + sw.rotor.chi * jz * jz + occ.iter().map(|&k| sw.modes[k].omega).sum::<f64>();
            levels.push(SpectrumLevel { jz, n_sw: occ.len(), occupation: occ.clone(), energy: e });
        }
        jz += 1.0;
    }
    levels.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.jz.total_cmp(&b.jz)));
    RswSpectrum { e0, levels }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_couplings, CouplingSpec, LatticeGeometry};
    use crate::rotor::oat_series;
    use proptest::prelude::*;

    fn nn(l: usize) -> CouplingMatrix {
        build_couplings(LatticeGeometry::square(l), CouplingSpec::nearest_neighbor()).unwrap()
    }

    #[test]
    fn bare_inertia_values() {
        assert!((bare_inertia(&nn(4), 0.5).chi - 4.0 * 0.5 / 30.0).abs() < 1e-15);
        assert_eq!(bare_inertia(&nn(4), 1.0).chi, 0.0);
        let ryd = build_couplings(LatticeGeometry::square(4), CouplingSpec::rydberg(3.0)).unwrap();
        assert!((bare_inertia(&ryd, 0.0).chi - 0.4603).abs() < 2e-4);
    }

    #[test]
    fn heisenberg_dispersion_is_a_k() {
        let sw = dispersion(&nn(6), 1.0).unwrap();
        for m in &sw.modes {
            assert_eq!(m.b, 0.0);
            let expect = 2.0 - (m.k[0].cos() + m.k[1].cos());
            assert!((m.omega - expect).abs() < 1e-12);
        }
        assert_eq!(spin_wave_density(&sw, 3.0), 0.0);
    }

    #[test]
    fn closed_form_dispersion() {
        for delta in [-1.0, -0.5, 0.0, 0.5, 0.75] {
            let sw = dispersion(&nn(8), delta).unwrap();
            for m in &sw.modes {
                let expect = 0.5 * ((sw.j0 - m.jk) * (sw.j0 - delta * m.jk)).sqrt();
                assert!((m.omega - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn goldstone_mode_is_linear() {
        let delta = 0.5;
        let mut ratios = Vec::new();
        for l in [24, 48] {
            let sw = dispersion(&nn(l), delta).unwrap();
            let m = sw.modes.iter().find(|m| m.k[1] == 0.0 && m.k[0] > 0.0).unwrap();
            ratios.push(m.omega / m.k[0]);
        }
        assert!((ratios[0] - ratios[1]).abs() / ratios[1] < 1e-2);
        // ω ≈ |k| √(1−Δ) for nearest neighbours
        let expect = (1.0 - delta).sqrt();
        assert!((ratios[1] - expect).abs() / expect < 5e-3);
    }

    #[test]
    fn unstable_modes_rejected() {
        assert!(matches!(dispersion(&nn(8), 1.5), Err(Error::Numerical(_))));
    }

    #[test]
    fn zero_spin_waves_reduce_to_oat() {
        let mut sw = dispersion(&nn(6), 0.5).unwrap();
        sw.modes.iter_mut().for_each(|m| m.b = 0.0);
        let ts: Vec<f64> = (0..40).map(|k| 0.25 * k as f64).collect();
        let a = rsw_quench(&sw, &ts, Exec::Sequential).unwrap();
        let b = oat_series(sw.rotor, &ts, Exec::Sequential).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            assert_eq!(p.n_sw, Some(0.0));
            assert_eq!((p.m_x, p.xi2, p.v_perp_min), (q.m_x, q.xi2, q.v_perp_min));
        }
    }

    #[test]
    fn tos_fit_exact_recovery() {
        let e: Vec<(f64, f64)> = (-3..=3).map(|j| (j as f64, -7.5 + 0.123 * (j * j) as f64)).collect();
        let f = tos_fit(&e).unwrap();
        assert!((f.chi - 0.123).abs() < 1e-13 && (f.e0 + 7.5).abs() < 1e-13);
        assert!(f.quadratic);
        assert!(tos_fit(&e[..3]).is_err());
    }

    #[test]
    fn tos_fit_flags_non_quadratic() {
        let e: Vec<(f64, f64)> = (0..6).map(|j| (j as f64, (j as f64).powi(4))).collect();
        assert!(!tos_fit(&e).unwrap().quadratic);
    }

    #[test]
    fn rescaling() {
        let (a, b) = (nn(4), nn(8));
        let chi = bare_inertia(&a, 0.5).chi;
        assert!((rescale_inertia(chi, &a, &b).unwrap() - bare_inertia(&b, 0.5).chi).abs() < 1e-15);
        assert!((rescale_inertia(0.069, &a, &b).unwrap() - 0.069 * 15.0 / 63.0).abs() < 1e-15);
        let ryd = |l| build_couplings(LatticeGeometry::square(l), CouplingSpec::rydberg(1.5)).unwrap();
        let (r4, r8) = (ryd(4), ryd(8));
        let chi = bare_inertia(&r4, 0.0).chi;
        assert!((rescale_inertia(chi, &r4, &r8).unwrap() - bare_inertia(&r8, 0.0).chi).abs() < 1e-14);
        assert!(rescale_inertia(chi, &r4, &b).is_err());
    }

    #[test]
    fn spectrum_structure() {
        let sw = dispersion(&nn(4), 0.5).unwrap();
        let spec = rsw_spectrum(&sw, -10.0, 3.0, 2);
        assert!(spec.levels.windows(2).all(|w| w[0].energy <= w[1].energy));
        for jz in -3..=3 {
            let jz = jz as f64;
            assert!((spec.lowest(jz, 0).unwrap() - (-10.0 + sw.rotor.chi * jz * jz)).abs() < 1e-14);
            let w_min = sw.lowest_mode().unwrap().omega;
            assert!((spec.lowest(jz, 1).unwrap() - spec.lowest(jz, 0).unwrap() - w_min).abs() < 1e-12);
        }
        // 7 sectors × (1 + 15 + 15·16/2) levels
        assert_eq!(spec.levels.len(), 7 * (1 + 15 + 120));
    }

    proptest! {
        #[test]
        fn dispersion_real_and_density_bounded(
            delta in -1.0f64..=1.0, l in 3usize..9, alpha in 1.5f64..6.0, t in 0.0f64..50.0
        ) {
            let cm = build_couplings(LatticeGeometry::square(l), CouplingSpec::power_law(alpha)).unwrap();
            let sw = dispersion(&cm, delta).unwrap();
            prop_assert!(sw.modes.iter().all(|m| m.omega >= 0.0 && m.omega.is_finite()));
            let n = spin_wave_density(&sw, t);
            prop_assert!(n >= 0.0);
            let zero_modes = sw.modes.iter().any(|m| m.omega < OMEGA_FLOOR && m.b != 0.0);
            if !zero_modes {
                prop_assert!(n <= sw.max_density() * (1.0 + 1e-12));
            }
        }
    }
}

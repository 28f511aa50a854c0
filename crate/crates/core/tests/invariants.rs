use proptest::prelude::*;
use squeeze_core::collective::{min_transverse_variance, squeezing_parameter, CollectiveMoments};
use squeeze_core::dtwa::{run_ensemble, DtwaOptions};
use squeeze_core::ed::{ed_quench, EdSystem, QuenchOptions, DEFAULT_MAX_BYTES};
use squeeze_core::io::{read_series_csv, write_series_csv};
use squeeze_core::lattice::{build_couplings, fourier_coupling, CouplingSpec, LatticeGeometry};
use squeeze_core::rotor::{evolve_ladder, oat_series, LadderState, RotorModel};
use squeeze_core::Exec;

fn spec() -> impl Strategy<Value = CouplingSpec> {
    prop_oneof![
        Just(CouplingSpec::nearest_neighbor()),
        (0.5f64..6.0).prop_map(CouplingSpec::power_law),
        (0.0f64..3.0).prop_map(CouplingSpec::rydberg),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn couplings_are_symmetric_translation_invariant_and_balanced(
        lx in 2usize..9, ly in 2usize..9, s in spec()
    ) {
        let cm = build_couplings(LatticeGeometry::rect(lx, ly), s).unwrap();
        let n = cm.n_sites();
        prop_assert!(cm.is_symmetric(0.0));
        prop_assert!(cm.is_translation_invariant(1e-12));
        for i in 0..n {
            prop_assert_eq!(cm.get(i, i), 0.0);
            prop_assert!(cm.row(i).iter().all(|&v| v >= 0.0));
            let row: f64 = cm.row(i).iter().sum();
            prop_assert!((row - cm.j0).abs() <= 1e-12 * cm.j0);
        }
        let g = cm.geometry.clone();
        for i in 0..n {
            let (dx, dy) = g.displacement(0, i);
            prop_assert!(2 * dx > -(lx as i64) && 2 * dx <= lx as i64);
            prop_assert!(2 * dy > -(ly as i64) && 2 * dy <= ly as i64);
        }
    }

    #[test]
    fn fourier_transform_sum_rules(l in 2usize..9, s in spec()) {
        let cm = build_couplings(LatticeGeometry::square(l), s).unwrap();
        let mg = fourier_coupling(&cm).unwrap();
        let n = cm.n_sites() as f64;
        prop_assert!((mg.j0() - cm.j0).abs() <= 1e-12 * cm.j0);
        let sum: f64 = mg.jk.iter().sum();
        prop_assert!(sum.abs() <= 1e-10 * cm.j0 * n);
        let lhs = mg.jk.iter().map(|j| j * j).sum::<f64>() / n;
        let rhs = (0..cm.n_sites()).flat_map(|i| cm.row(i).to_vec()).map(|v| v * v).sum::<f64>() / n;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
    }

    #[test]
    fn ladder_evolution_is_unitary(n in 4usize..200, chi in 0.01f64..2.0, t in 0.0f64..50.0) {
        let s = evolve_ladder(&LadderState::coherent_x(n), &RotorModel::new(n, chi).unwrap(), t);
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn squeezing_respects_uncertainty_bound(n in 4usize..400, chi in 0.01f64..1.0) {
        let ts: Vec<f64> = (0..40).map(|k| 0.05 * k as f64 / chi / (n as f64).powf(0.5)).collect();
        let series = oat_series(RotorModel::new(n, chi).unwrap(), &ts, Exec::default()).unwrap();
        for p in &series.points {
            prop_assert!(p.m_x <= 0.5 + 1e-12);
            prop_assert!(p.v_perp_min * (p.var_e1 + p.var_e2 - p.v_perp_min) >= p.m_x * p.m_x / 4.0 - 1e-9);
        }
    }

    #[test]
    fn transverse_minimum_below_axis_variances(
        mean in prop::array::uniform3(-10.0f64..10.0),
        a in prop::array::uniform3(prop::array::uniform3(-3.0f64..3.0)),
    ) {
        prop_assume!(mean.iter().map(|v| v * v).sum::<f64>() > 0.1);
        let mut second = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                second[i][j] = (0..3).map(|k| a[i][k] * a[j][k]).sum::<f64>() + mean[i] * mean[j];
            }
        }
        let m = CollectiveMoments { t: 0.0, n: 20, mean, second };
        let tm = min_transverse_variance(&m).unwrap();
        prop_assert!(tm.value >= -1e-9);
        prop_assert!(tm.value <= tm.var_e1.min(tm.var_e2) + 1e-12);
        let p = squeezing_parameter(&m).unwrap();
        prop_assert!((p.xi2 - 20.0 * tm.value / m.mean_norm().powi(2)).abs() <= 1e-9 * p.xi2.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn ed_quench_conserves_norm_energy_and_sectors(delta in -0.9f64..0.9, s in spec()) {
        let cm = build_couplings(LatticeGeometry::rect(3, 3), s).unwrap();
        let sys = EdSystem::new(&cm, delta, DEFAULT_MAX_BYTES, Exec::default()).unwrap();
        let ts: Vec<f64> = (0..6).map(|k| 0.7 * k as f64).collect();
        let run = ed_quench(&sys, &ts, &QuenchOptions::default(), Exec::default()).unwrap();
        let c = run.conservation;
        prop_assert!(c.norm_error < 1e-10 && c.energy_rel_error < 1e-8 && c.sector_weight_error < 1e-12);
        prop_assert!((c.initial_energy + 9.0 * cm.j0 / 8.0).abs() < 1e-10);
        for m in &run.moments {
            prop_assert!(m.mean[1].abs() < 1e-10 && m.mean[2].abs() < 1e-10);
        }
    }

    #[test]
    fn dtwa_is_seed_deterministic(seed in 0u64..1000) {
        let cm = build_couplings(LatticeGeometry::square(3), CouplingSpec::nearest_neighbor()).unwrap();
        let opts = DtwaOptions { n_traj: 100, seed, ..Default::default() };
        let ts = [0.0, 0.5, 1.0];
        let a = run_ensemble(&cm, 0.5, &ts, &opts, Exec::default()).unwrap();
        let b = run_ensemble(&cm, 0.5, &ts, &opts, Exec::Sequential).unwrap();
        prop_assert_eq!(a.moments, b.moments);
    }
}

#[test]
fn series_csv_round_trip() {
    let ts: Vec<f64> = (0..30).map(|k| 0.1 * k as f64).collect();
    let series = oat_series(RotorModel::new(64, 1.0 / 63.0).unwrap(), &ts, Exec::default()).unwrap();
    let mut buf = Vec::new();
    write_series_csv(&series, &mut buf).unwrap();
    let back = read_series_csv(buf.as_slice(), series.meta.clone()).unwrap();
    assert_eq!(back.points.len(), series.points.len());
    for (a, b) in back.points.iter().zip(&series.points) {
        assert_eq!(a.t, b.t);
        assert_eq!(a.xi2, b.xi2);
        assert_eq!(a.m_x, b.m_x);
    }
}

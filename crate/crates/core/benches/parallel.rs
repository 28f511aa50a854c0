use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use squeeze_core::dtwa::{run_ensemble, DtwaOptions};
use squeeze_core::ed::{ed_quench, EdSystem, QuenchOptions, DEFAULT_MAX_BYTES};
use squeeze_core::lattice::{build_couplings, CouplingSpec, LatticeGeometry};
use squeeze_core::rotor::RotorModel;
use squeeze_core::rsw::{dispersion, rsw_quench};
use squeeze_core::Exec;

fn execs() -> Vec<Exec> {
    let mut v = vec![Exec::Sequential, Exec::default()];
    v.dedup();
    v
}

fn grid(n: usize, dt: f64) -> Vec<f64> {
    (0..=n).map(|k| k as f64 * dt).collect()
}

fn ed(c: &mut Criterion) {
    let cm = build_couplings(LatticeGeometry::square(4), CouplingSpec::nearest_neighbor()).unwrap();
    let sys = EdSystem::new(&cm, 0.5, DEFAULT_MAX_BYTES, Exec::Sequential).unwrap();
    let ts = grid(4, 0.25);
    let mut g = c.benchmark_group("ed_quench_4x4");
    g.sample_size(10);
    for exec in execs() {
        g.bench_with_input(BenchmarkId::from_parameter(exec.name()), &exec, |b, &e| {
            b.iter(|| ed_quench(black_box(&sys), &ts, &QuenchOptions::default(), e).unwrap())
        });
    }
    g.finish();
}

fn dtwa(c: &mut Criterion) {
    let cm = build_couplings(LatticeGeometry::square(8), CouplingSpec::nearest_neighbor()).unwrap();
    let ts = grid(10, 0.1);
    let opts = DtwaOptions { n_traj: 320, ..Default::default() };
    let mut g = c.benchmark_group("dtwa_8x8");
    g.sample_size(10);
    for exec in execs() {
        g.bench_with_input(BenchmarkId::from_parameter(exec.name()), &exec, |b, &e| {
            b.iter(|| run_ensemble(black_box(&cm), 0.5, &ts, &opts, e).unwrap())
        });
    }
    g.finish();
}

fn rsw(c: &mut Criterion) {
    let cm = build_couplings(LatticeGeometry::square(32), CouplingSpec::nearest_neighbor()).unwrap();
    let sw = dispersion(&cm, 0.5).unwrap().with_rotor(RotorModel::new(1024, 0.07 * 15.0 / 1023.0).unwrap());
    let ts = grid(500, 0.1);
    let mut g = c.benchmark_group("rsw_quench_32x32");
    for exec in execs() {
        g.bench_with_input(BenchmarkId::from_parameter(exec.name()), &exec, |b, &e| {
            b.iter(|| rsw_quench(black_box(&sw), &ts, e).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, ed, dtwa, rsw);
criterion_main!(benches);

//! Discrete truncated Wigner approximation for the x-polarized CSS quench.
//!
//! Each trajectory draws `s^x = ½`, `s^y, s^z = ±½` and follows the classical
//! equations `ds_i/dt = s_i × B_i`, `B_i = Σ_j 𝒥_ij (s_j^x, s_j^y, Δ s_j^z)`,
//! integrated with fixed-step RK4. Trajectory `k` uses stream `k` of a ChaCha
//! generator keyed by the master seed, and sums are accumulated in fixed
//! trajectory order, so results do not depend on the execution policy.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::collective::{squeezing_parameter, CollectiveMoments, PointError, SeriesMeta, TimeSeries};
use crate::error::{Error, Result};
use crate::lattice::CouplingMatrix;
use crate::par::Exec;

pub const MIN_TRAJECTORIES: usize = 100;
pub const JACKKNIFE_BLOCKS: usize = 10;
/// Largest allowed `dt · J0`.
pub const MAX_DT_J: f64 = 0.05;
/// Tolerated relative classical-energy drift per unit time.
pub const ENERGY_DRIFT_TOL: f64 = 1e-6;
const CHUNK: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalConfig {
    pub t: f64,
    pub spins: Vec<[f64; 3]>,
}

impl ClassicalConfig {
    pub fn total(&self) -> [f64; 3] {
        let mut j = [0.0; 3];
        for s in &self.spins {
            for a in 0..3 {
                j[a] += s[a];
            }
        }
        j
    }
}

/// Sparse coupling rows used by the equations of motion.
#[derive(Debug, Clone)]
pub struct Neighbors {
    offsets: Vec<usize>,
    entries: Vec<(usize, f64)>,
}

impl Neighbors {
    pub fn new(cm: &CouplingMatrix) -> Self {
        let mut offsets = vec![0];
        let mut entries = Vec::new();
        for row in cm.neighbor_lists() {
            entries.extend(row);
            offsets.push(entries.len());
        }
        Self { offsets, entries }
    }

    /// Rows from a list of bonds `(i, j, 𝒥_ij)` with `i ≠ j`.
    pub fn from_bonds(n: usize, bonds: &[(usize, usize, f64)]) -> Self {
        let mut rows = vec![Vec::new(); n];
        for &(i, j, v) in bonds {
            rows[i].push((j, v));
            rows[j].push((i, v));
        }
        let mut offsets = vec![0];
        let mut entries = Vec::new();
        for row in rows {
            entries.extend(row);
            offsets.push(entries.len());
        }
        Self { offsets, entries }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Largest `Σ_j |𝒥_ij|` over sites.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.n()).map(|i| self.row(i).iter().map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.entries[self.offsets[i]..self.offsets[i + 1]]
    }
}

pub fn sample_initial<R: Rng>(n: usize, rng: &mut R) -> ClassicalConfig {
    let spins = (0..n)
        .map(|_| {
            let y = if rng.gen::<bool>() { 0.5 } else { -0.5 };
            let z = if rng.gen::<bool>() { 0.5 } else { -0.5 };
            [0.5, y, z]
        })
        .collect();
    ClassicalConfig { t: 0.0, spins }
}

/// `H_cl = −Σ_{i<j} 𝒥_ij (s_i^x s_j^x + s_i^y s_j^y + Δ s_i^z s_j^z)`.
pub fn classical_energy(cfg: &ClassicalConfig, nb: &Neighbors, delta: f64) -> f64 {
    let mut e = 0.0;
    for (i, si) in cfg.spins.iter().enumerate() {
        for &(j, v) in nb.row(i) {
            let sj = &cfg.spins[j];
            e += v * (si[0] * sj[0] + si[1] * sj[1] + delta * si[2] * sj[2]);
        }
    }
    -0.5 * e
}

fn rhs(s: &[[f64; 3]], nb: &Neighbors, delta: f64, out: &mut [[f64; 3]]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut b = [0.0; 3];
        for &(j, v) in nb.row(i) {
            let sj = &s[j];
            b[0] += v * sj[0];
            b[1] += v * sj[1];
            b[2] += v * delta * sj[2];
        }
        let si = &s[i];
        *o = [si[1] * b[2] - si[2] * b[1], si[2] * b[0] - si[0] * b[2], si[0] * b[1] - si[1] * b[0]];
    }
}

/// Scratch buffers for RK4.
#[derive(Debug, Clone)]
pub struct Rk4Workspace {
    k: [Vec<[f64; 3]>; 4],
    tmp: Vec<[f64; 3]>,
}

impl Rk4Workspace {
    pub fn new(n: usize) -> Self {
        let z = vec![[0.0; 3]; n];
        Self { k: [z.clone(), z.clone(), z.clone(), z.clone()], tmp: z }
    }
}

/// One fixed RK4 step of length `dt`.
pub fn eom_step(cfg: &mut ClassicalConfig, nb: &Neighbors, delta: f64, dt: f64, ws: &mut Rk4Workspace) {
    let n = cfg.spins.len();
    let stage = |src: &[[f64; 3]], k: &[[f64; 3]], h: f64, dst: &mut Vec<[f64; 3]>| {
        for i in 0..n {
            for a in 0..3 {
                dst[i][a] = src[i][a] + h * k[i][a];
            }
        }
    };
    let [k1, k2, k3, k4] = &mut ws.k;
    rhs(&cfg.spins, nb, delta, k1);
    stage(&cfg.spins, k1, 0.5 * dt, &mut ws.tmp);
    rhs(&ws.tmp, nb, delta, k2);
    stage(&cfg.spins, k2, 0.5 * dt, &mut ws.tmp);
    rhs(&ws.tmp, nb, delta, k3);
    stage(&cfg.spins, k3, dt, &mut ws.tmp);
    rhs(&ws.tmp, nb, delta, k4);
    for i in 0..n {
        for a in 0..3 {
            cfg.spins[i][a] += dt / 6.0 * (k1[i][a] + 2.0 * k2[i][a] + 2.0 * k3[i][a] + k4[i][a]);
        }
    }
    cfg.t += dt;
}

/// Integrates to `t_end` with steps no longer than `dt`.
pub fn evolve_to(cfg: &mut ClassicalConfig, nb: &Neighbors, delta: f64, t_end: f64, dt: f64, ws: &mut Rk4Workspace) {
    let span = t_end - cfg.t;
    if span <= 0.0 {
        return;
    }
    let steps = (span / dt - 1e-9).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    for _ in 0..steps {
        eom_step(cfg, nb, delta, h, ws);
    }
    cfg.t = t_end;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtwaOptions {
    pub n_traj: usize,
    pub seed: u64,
    /// RK4 step in units of `1/J`.
    pub dt: f64,
    /// Number of times `dt` may be halved when the energy check fails.
    pub max_halvings: usize,
}

impl Default for DtwaOptions {
    fn default() -> Self {
        Self { n_traj: 5000, seed: 1, dt: 0.01, max_halvings: 4 }
    }
}

/// Running sums of `J` and `J_a J_b` at every output time.
#[derive(Debug, Clone, PartialEq)]
pub struct Accumulator {
    pub count: usize,
    pub sum: Vec<[f64; 3]>,
    pub sum2: Vec<[[f64; 3]; 3]>,
}

impl Accumulator {
    pub fn new(n_times: usize) -> Self {
        Self { count: 0, sum: vec![[0.0; 3]; n_times], sum2: vec![[[0.0; 3]; 3]; n_times] }
    }

    fn record(&mut self, k: usize, j: [f64; 3]) {
        for a in 0..3 {
            self.sum[k][a] += j[a];
            for b in 0..3 {
                self.sum2[k][a][b] += j[a] * j[b];
            }
        }
    }

    fn add(&mut self, other: &Self, sign: f64) {
        self.count = (self.count as f64 + sign * other.count as f64) as usize;
        for (s, o) in self.sum.iter_mut().zip(&other.sum) {
            for a in 0..3 {
                s[a] += sign * o[a];
            }
        }
        for (s, o) in self.sum2.iter_mut().zip(&other.sum2) {
            for a in 0..3 {
                for b in 0..3 {
                    s[a][b] += sign * o[a][b];
                }
            }
        }
    }

    pub fn moments(&self, k: usize, t: f64, n: usize) -> CollectiveMoments {
        let c = self.count as f64;
        let mut mean = [0.0; 3];
        let mut second = [[0.0; 3]; 3];
        for a in 0..3 {
            mean[a] = self.sum[k][a] / c;
            for b in 0..3 {
                second[a][b] = self.sum2[k][a][b] / c;
            }
        }
        CollectiveMoments { t, n, mean, second }
    }
}

#[derive(Debug, Clone)]
pub struct DtwaRun {
    pub series: TimeSeries,
    pub moments: Vec<CollectiveMoments>,
    /// Block sums, in block order.
    pub blocks: Vec<Accumulator>,
    pub dt: f64,
    /// Relative energy drift per unit time of the probe trajectory.
    pub energy_drift: f64,
}

fn trajectory_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn energy_scale(nb: &Neighbors) -> f64 {
    let s: f64 = nb.entries.iter().map(|(_, v)| v.abs()).sum();
    (s / 8.0).max(f64::MIN_POSITIVE)
}

/// Relative energy drift per unit time of trajectory 0 over `[0, t_end]`.
fn probe_drift(nb: &Neighbors, delta: f64, t_end: f64, dt: f64, seed: u64) -> f64 {
    let mut cfg = sample_initial(nb.n(), &mut trajectory_rng(seed, 0));
    let e0 = classical_energy(&cfg, nb, delta);
    let mut ws = Rk4Workspace::new(nb.n());
    evolve_to(&mut cfg, nb, delta, t_end, dt, &mut ws);
    (classical_energy(&cfg, nb, delta) - e0).abs() / energy_scale(nb) / t_end.max(1.0)
}

fn run_chunk(
    nb: &Neighbors,
    delta: f64,
    t_grid: &[f64],
    dt: f64,
    seed: u64,
    range: std::ops::Range<usize>,
) -> Accumulator {
    let n = nb.n();
    let mut acc = Accumulator::new(t_grid.len());
    let mut ws = Rk4Workspace::new(n);
    for idx in range {
        let mut cfg = sample_initial(n, &mut trajectory_rng(seed, idx));
        for (k, &t) in t_grid.iter().enumerate() {
            evolve_to(&mut cfg, nb, delta, t, dt, &mut ws);
            acc.record(k, cfg.total());
        }
        acc.count += 1;
    }
    acc
}

/// Ensemble run over `t_grid` with jackknife errors on `m_x` and `ξ²`.
pub fn run_ensemble(cm: &CouplingMatrix, delta: f64, t_grid: &[f64], opts: &DtwaOptions, exec: Exec) -> Result<DtwaRun> {
    run_ensemble_on(&Neighbors::new(cm), delta, t_grid, opts, exec)
}

pub fn run_ensemble_on(nb: &Neighbors, delta: f64, t_grid: &[f64], opts: &DtwaOptions, exec: Exec) -> Result<DtwaRun> {
    if opts.n_traj < MIN_TRAJECTORIES {
        return Err(Error::Config(format!("DTWA needs at least {MIN_TRAJECTORIES} trajectories")));
    }
    if t_grid.is_empty() || t_grid[0] < 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("time grid must be non-negative and increasing".into()));
    }
    if !(opts.dt > 0.0) || opts.dt * nb.max_row_sum() > MAX_DT_J {
        return Err(Error::Config(format!("dt·J0 must lie in (0, {MAX_DT_J}]")));
    }
    let n = nb.n();
    let t_end = *t_grid.last().unwrap();
    let mut dt = opts.dt;
    let mut drift = probe_drift(nb, delta, t_end, dt, opts.seed);
    let mut halvings = 0;
    while drift > ENERGY_DRIFT_TOL && halvings < opts.max_halvings {
        dt *= 0.5;
        halvings += 1;
        warn!("DTWA energy drift {drift:.2e} per unit time; halving dt to {dt}");
        drift = probe_drift(nb, delta, t_end, dt, opts.seed);
    }
    if drift > ENERGY_DRIFT_TOL {
        warn!("DTWA energy drift {drift:.2e} per unit time persists at dt = {dt}");
    }

    let bounds: Vec<usize> = (0..=JACKKNIFE_BLOCKS).map(|b| b * opts.n_traj / JACKKNIFE_BLOCKS).collect();
    let mut chunks = Vec::new();
    for b in 0..JACKKNIFE_BLOCKS {
        let mut lo = bounds[b];
        while lo < bounds[b + 1] {
            let hi = (lo + CHUNK).min(bounds[b + 1]);
            chunks.push((b, lo..hi));
            lo = hi;
        }
    }
    let partial = exec.map(&chunks, |(_, r)| run_chunk(nb, delta, t_grid, dt, opts.seed, r.clone()));
    let mut blocks = vec![Accumulator::new(t_grid.len()); JACKKNIFE_BLOCKS];
    for ((b, _), acc) in chunks.iter().zip(&partial) {
        blocks[*b].add(acc, 1.0);
    }
    let mut total = Accumulator::new(t_grid.len());
    for b in &blocks {
        total.add(b, 1.0);
    }

    let moments: Vec<CollectiveMoments> = t_grid.iter().enumerate().map(|(k, &t)| total.moments(k, t, n)).collect();
    let points = moments.iter().map(squeezing_parameter).collect::<Result<Vec<_>>>()?;
    let errors = jackknife(&total, &blocks, t_grid, n);
    let mut meta = SeriesMeta {
        model: format!("delta={delta}"),
        solver: "dtwa".into(),
        n,
        seed: Some(opts.seed),
        ..Default::default()
    };
    meta.extra.insert("n_traj".into(), opts.n_traj.to_string());
    meta.extra.insert("dt".into(), dt.to_string());
    let series = TimeSeries { meta, points, errors: Some(errors) };
    Ok(DtwaRun { series, moments, blocks, dt, energy_drift: drift })
}

/// Leave-one-block-out errors; a failed frame in a replica gives `NaN`.
fn jackknife(total: &Accumulator, blocks: &[Accumulator], t_grid: &[f64], n: usize) -> Vec<PointError> {
    let nb = blocks.len() as f64;
    let replicas: Vec<Accumulator> = blocks
        .iter()
        .map(|b| {
            let mut r = total.clone();
            r.add(b, -1.0);
            r
        })
        .collect();
    t_grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let vals: Vec<(f64, f64)> = replicas
                .iter()
                .map(|r| match squeezing_parameter(&r.moments(k, t, n)) {
                    Ok(p) => (p.m_x, p.xi2),
                    Err(_) => (f64::NAN, f64::NAN),
                })
                .collect();
            let err = |f: fn(&(f64, f64)) -> f64| {
                let mean = vals.iter().map(f).sum::<f64>() / nb;
                ((nb - 1.0) / nb * vals.iter().map(|v| (f(v) - mean).powi(2)).sum::<f64>()).sqrt()
            };
            PointError { m_x: err(|v| v.0), xi2: err(|v| v.1) }
        })
        .collect()
}

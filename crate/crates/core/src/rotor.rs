//! One-axis twisting of a collective spin `K` (the rotor of rotor/spin-wave
//! theory) on the `(N+1)`-level Dicke ladder, `H_R = χ (K^z)²` with `χ = 1/(2I)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::collective::{
    squeezing_parameter, CollectiveMoments, RaisingMoments, SeriesMeta, TimeSeries,
};
use crate::error::{Error, Result};
use crate::par::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotorModel {
    pub n: usize,
    /// Twisting rate `1/(2I)`.
    pub chi: f64,
}

impl RotorModel {
    pub fn new(n: usize, chi: f64) -> Result<Self> {
        if !(chi >= 0.0 && chi.is_finite()) {
            return Err(Error::Config(format!("twisting rate must be >= 0, got {chi}")));
        }
        Ok(Self { n, chi })
    }

    /// Moment of inertia `I = 1/(2χ)`; infinite for a non-twisting rotor.
    pub fn inertia(&self) -> f64 {
        1.0 / (2.0 * self.chi)
    }
}

/// Amplitudes `c_m` over `m = -N/2, …, N/2`; index `k` stores `m = k - N/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderState {
    pub n: usize,
    pub amps: Vec<Complex64>,
}

impl LadderState {
    /// x-polarized coherent state, `c_m = 2^{-N/2} √C(N, N/2+m)`.
    pub fn coherent_x(n: usize) -> Self {
        let amps = coherent_amplitudes(n).into_iter().map(|a| Complex64::new(a, 0.0)).collect();
        Self { n, amps }
    }

    pub fn m(&self, k: usize) -> f64 {
        k as f64 - 0.5 * self.n as f64
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Real CSS amplitudes via the ratio recurrence `c_{k+1}/c_k = √((N−k)/(k+1))`,
/// accumulated in logs and renormalized.
fn coherent_amplitudes(n: usize) -> Vec<f64> {
    let mut logs = Vec::with_capacity(n + 1);
    let mut l = 0.0;
    logs.push(l);
    for k in 0..n {
        l += 0.5 * (((n - k) as f64).ln() - ((k + 1) as f64).ln());
        logs.push(l);
    }
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut a: Vec<f64> = logs.iter().map(|&x| (x - peak).exp()).collect();
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    a.iter_mut().for_each(|x| *x /= norm);
    a
}

/// `√(j(j+1) − m(m+1))`, the matrix element of `K⁺` from `m` to `m+1`.
#[inline]
fn raise(j: f64, m: f64) -> f64 {
    (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

/// `c_m(t) = c_m · exp(−i m² χ t)`.
pub fn evolve_ladder(s: &LadderState, rotor: &RotorModel, t: f64) -> LadderState {
    let amps = s
        .amps
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let m = s.m(k);
            c * Complex64::from_polar(1.0, -m * m * rotor.chi * t)
        })
        .collect();
    LadderState { n: s.n, amps }
}

pub fn ladder_raising(s: &LadderState) -> RaisingMoments {
    let j = 0.5 * s.n as f64;
    let mut r = RaisingMoments::default();
    for (k, c) in s.amps.iter().enumerate() {
        let m = s.m(k);
        let p = c.norm_sqr();
        r.norm += p;
        r.jz += p * m;
        r.jz2 += p * m * m;
        if k + 1 < s.amps.len() {
            let a = raise(j, m);
            let z = s.amps[k + 1].conj() * c * a;
            r.jp += z;
            r.jp_jz += z * (2.0 * m + 1.0);
            if k + 2 < s.amps.len() {
                r.jp2 += s.amps[k + 2].conj() * c * a * raise(j, m + 1.0);
            }
        }
    }
    r.perp2 = j * (j + 1.0) * r.norm - r.jz2;
    r
}

pub fn ladder_moments(s: &LadderState, t: f64) -> CollectiveMoments {
    ladder_raising(s).to_moments(t, s.n)
}

/// Precomputed OAT trajectory from the x-CSS: moments at any `t` in `O(N)`
/// without forming `m² χ t` phases.
#[derive(Debug, Clone)]
pub struct OatDynamics {
    pub rotor: RotorModel,
    probs: Vec<f64>,
    /// `c_{k+1} c_k a_k`.
    hop1: Vec<f64>,
    /// `c_{k+2} c_k a_k a_{k+1}`.
    hop2: Vec<f64>,
}

impl OatDynamics {
    pub fn new(rotor: RotorModel) -> Self {
        let n = rotor.n;
        let j = 0.5 * n as f64;
        let c = coherent_amplitudes(n);
        let m = |k: usize| k as f64 - j;
        let probs = c.iter().map(|x| x * x).collect();
        let hop1 = (0..n).map(|k| c[k + 1] * c[k] * raise(j, m(k))).collect();
        let hop2 = (0..n.saturating_sub(1))
            .map(|k| c[k + 2] * c[k] * raise(j, m(k)) * raise(j, m(k) + 1.0))
            .collect();
        Self { rotor, probs, hop1, hop2 }
    }

    pub fn raising(&self, t: f64) -> RaisingMoments {
        let n = self.rotor.n;
        let j = 0.5 * n as f64;
        let w = self.rotor.chi * t;
        let mut r = RaisingMoments::default();
        for (k, &p) in self.probs.iter().enumerate() {
            let m = k as f64 - j;
            r.norm += p;
            r.jz += p * m;
            r.jz2 += p * m * m;
        }
        for (k, &h) in self.hop1.iter().enumerate() {
            let m = k as f64 - j;
            // conj(c_{m+1}(t)) c_m(t) = c c exp(i χ t ((m+1)² − m²))
            let z = Complex64::from_polar(h, w * (2.0 * m + 1.0));
            r.jp += z;
            r.jp_jz += z * (2.0 * m + 1.0);
        }
        for (k, &h) in self.hop2.iter().enumerate() {
            let m = k as f64 - j;
            r.jp2 += Complex64::from_polar(h, w * (4.0 * m + 4.0));
        }
        r.perp2 = j * (j + 1.0) * r.norm - r.jz2;
        r
    }

    pub fn moments(&self, t: f64) -> CollectiveMoments {
        self.raising(t).to_moments(t, self.rotor.n)
    }

    pub fn xi2(&self, t: f64) -> f64 {
        squeezing_parameter(&self.moments(t)).map(|p| p.xi2).unwrap_or(f64::INFINITY)
    }

    pub fn v_perp(&self, t: f64) -> f64 {
        squeezing_parameter(&self.moments(t)).map(|p| p.v_perp_min).unwrap_or(f64::INFINITY)
    }
}

/// OAT squeezing series on `t_grid`.
pub fn oat_series(rotor: RotorModel, t_grid: &[f64], exec: Exec) -> Result<TimeSeries> {
    let dynamics = OatDynamics::new(rotor);
    let points = exec.map(t_grid, |&t| squeezing_parameter(&dynamics.moments(t)));
    let mut ts = TimeSeries::new(SeriesMeta {
        model: format!("oat chi={}", rotor.chi),
        solver: "oat".into(),
        n: rotor.n,
        ..Default::default()
    });
    ts.points = points.into_iter().collect::<Result<_>>()?;
    Ok(ts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OatOptimum {
    pub n: usize,
    pub chi: f64,
    pub xi2_min: f64,
    /// Time of the `ξ²` minimum.
    pub t_opt: f64,
    /// Time of the transverse-variance minimum.
    pub t_min: f64,
    pub v_perp_min: f64,
}

/// Golden-section minimization of `ξ_R²(t)` and `v_⊥(t)` for the OAT rotor.
///
/// The first minimum is bracketed on a logarithmic scan up to `π/(2χ)`, then
/// refined to a relative tolerance of `1e-8` in time.
pub fn oat_optimum(n: usize, chi: f64) -> Result<OatOptimum> {
    if n < 4 {
        return Err(Error::Config(format!("OAT optimum needs N >= 4, got {n}")));
    }
    if !(chi > 0.0) {
        return Err(Error::Config("OAT optimum needs chi > 0".into()));
    }
    let dyns = OatDynamics::new(RotorModel::new(n, chi)?);
    let t_est = (n as f64).powf(-2.0 / 3.0) / chi;
    let t_hi = (std::f64::consts::FRAC_PI_2 / chi).min(50.0 * t_est);
    let t_lo = 1e-3 * t_est.min(t_hi);
    let (t_opt, xi2_min) = scan_and_refine(|t| dyns.xi2(t), t_lo, t_hi)?;
    let (t_min, v_perp_min) = scan_and_refine(|t| dyns.v_perp(t), t_lo, t_hi)?;
    Ok(OatOptimum { n, chi, xi2_min, t_opt, t_min, v_perp_min })
}

fn scan_and_refine(f: impl Fn(f64) -> f64, t_lo: f64, t_hi: f64) -> Result<(f64, f64)> {
    const SCAN: usize = 600;
    let ratio = (t_hi / t_lo).powf(1.0 / (SCAN - 1) as f64);
    let ts: Vec<f64> = (0..SCAN).map(|k| t_lo * ratio.powi(k as i32)).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
    // first interior local minimum, which is the physically relevant one for OAT
    let i = (1..SCAN - 1)
        .find(|&i| vals[i] <= vals[i - 1] && vals[i] <= vals[i + 1] && vals[i] < vals[0])
        .ok_or(Error::Numerical("no interior minimum found in OAT scan".into()))?;
    Ok(golden_section(&f, ts[i - 1], ts[i + 1], 1e-8))
}

/// Golden-section search for a minimum of a unimodal function on `[a, b]`.
pub fn golden_section(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, rel_tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > rel_tol * 0.5 * (a.abs() + b.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

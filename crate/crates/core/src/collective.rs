//! Collective-spin observables: first and second moments of `J = Σ_i S_i`,
//! the minimum transverse variance, the squeezing parameter
//! `ξ_R² = N min_⊥ Var(J_⊥) / |⟨J⟩|²` and optimal-time extraction.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative cutoff on `|⟨J⟩| / N` below which the transverse frame is undefined.
pub const MEAN_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollectiveMoments {
    pub t: f64,
    pub n: usize,
    /// `⟨J⟩`.
    pub mean: [f64; 3],
    /// Symmetrized second moments `½⟨J_a J_b + J_b J_a⟩`.
    pub second: [[f64; 3]; 3],
}

impl CollectiveMoments {
    /// Moments of the x-polarized coherent spin state of `n` spins.
    pub fn coherent_x(n: usize) -> Self {
        let nf = n as f64;
        let mut second = [[0.0; 3]; 3];
        second[0][0] = nf * nf / 4.0;
        second[1][1] = nf / 4.0;
        second[2][2] = nf / 4.0;
        Self { t: 0.0, n, mean: [nf / 2.0, 0.0, 0.0], second }
    }

    pub fn covariance(&self) -> [[f64; 3]; 3] {
        let mut c = self.second;
        for (a, row) in c.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v -= self.mean[a] * self.mean[b];
            }
        }
        c
    }

    pub fn variance(&self, axis: usize) -> f64 {
        self.second[axis][axis] - self.mean[axis] * self.mean[axis]
    }

    pub fn mean_norm(&self) -> f64 {
        norm(self.mean)
    }

    /// Moments after the rotation `R`: `⟨J⟩ → R⟨J⟩`, `M → R M Rᵀ`.
    pub fn rotated(&self, r: &[[f64; 3]; 3]) -> Self {
        let mut mean = [0.0; 3];
        let mut second = [[0.0; 3]; 3];
        for a in 0..3 {
            mean[a] = (0..3).map(|b| r[a][b] * self.mean[b]).sum();
            for b in 0..3 {
                second[a][b] = (0..3)
                    .flat_map(|c| (0..3).map(move |d| (c, d)))
                    .map(|(c, d)| r[a][c] * self.second[c][d] * r[b][d])
                    .sum();
            }
        }
        Self { mean, second, ..*self }
    }
}

/// Expectation values expressed through raising operators, as produced by
/// solvers that store states per `J^z` sector (ED, the Dicke ladder).
///
/// `jp_jz` is `⟨J⁺J^z + J^zJ⁺⟩ = Σ_s (2s+1)⟨ψ_{s+1}|J⁺ψ_s⟩` and `perp2` is
/// `⟨J_x² + J_y²⟩`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RaisingMoments {
    pub norm: f64,
    pub jz: f64,
    pub jz2: f64,
    pub jp: Complex64,
    pub jp_jz: Complex64,
    pub jp2: Complex64,
    pub perp2: f64,
}

impl std::ops::AddAssign for RaisingMoments {
    fn add_assign(&mut self, o: Self) {
        self.norm += o.norm;
        self.jz += o.jz;
        self.jz2 += o.jz2;
        self.jp += o.jp;
        self.jp_jz += o.jp_jz;
        self.jp2 += o.jp2;
        self.perp2 += o.perp2;
    }
}

impl RaisingMoments {
    pub fn to_moments(&self, t: f64, n: usize) -> CollectiveMoments {
        let mean = [self.jp.re, self.jp.im, self.jz];
        let xx = 0.5 * self.jp2.re + 0.5 * self.perp2;
        let yy = -0.5 * self.jp2.re + 0.5 * self.perp2;
        let xy = 0.5 * self.jp2.im;
        let xz = 0.5 * self.jp_jz.re;
        let yz = 0.5 * self.jp_jz.im;
        let second = [[xx, xy, xz], [xy, yy, yz], [xz, yz, self.jz2]];
        CollectiveMoments { t, n, mean, second }
    }
}

/// Orthonormal pair spanning the plane perpendicular to `⟨J⟩`.
///
/// For `⟨J⟩ ∥ x̂` this is `(ŷ, ẑ)`.
pub fn transverse_frame(mean: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let nn = norm(mean);
    let u = [mean[0] / nn, mean[1] / nn, mean[2] / nn];
    let e1 = if u[2].abs() < 0.9 {
        normalize(cross([0.0, 0.0, 1.0], u))
    } else {
        normalize(cross(u, [1.0, 0.0, 0.0]))
    };
    let e2 = cross(u, e1);
    (e1, e2)
}

/// Transverse covariance and its minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseMinimum {
    pub value: f64,
    /// Angle of the minimizing direction in the `(e1, e2)` plane, in `(-π/2, π/2]`.
    pub theta: f64,
    pub var_e1: f64,
    pub var_e2: f64,
    pub cov_12: f64,
}

pub fn min_transverse_variance(m: &CollectiveMoments) -> Result<TransverseMinimum> {
    let nn = m.mean_norm();
    if !(nn >= MEAN_EPS * m.n as f64) {
        return Err(Error::FrameUndefined { norm: nn });
    }
    let (e1, e2) = transverse_frame(m.mean);
    let c = m.covariance();
    let quad = |u: [f64; 3], v: [f64; 3]| -> f64 {
        (0..3).flat_map(|a| (0..3).map(move |b| (a, b))).map(|(a, b)| u[a] * c[a][b] * v[b]).sum()
    };
    let v11 = quad(e1, e1);
    let v22 = quad(e2, e2);
    let c12 = quad(e1, e2);
    let half_sum = 0.5 * (v11 + v22);
    let radius = (0.25 * (v11 - v22).powi(2) + c12 * c12).sqrt();
    let value = half_sum - radius;
    let theta = wrap_half_pi(0.5 * c12.atan2(0.5 * (v11 - v22)) + 0.5 * PI);
    Ok(TransverseMinimum { value, theta, var_e1: v11, var_e2: v22, cov_12: c12 })
}

fn wrap_half_pi(mut a: f64) -> f64 {
    while a > 0.5 * PI {
        a -= PI;
    }
    while a <= -0.5 * PI {
        a += PI;
    }
    a
}

/// One time point of a squeezing run; variances are per spin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezingPoint {
    pub t: f64,
    /// `⟨J^x⟩ / N`.
    pub m_x: f64,
    pub var_e1: f64,
    pub var_e2: f64,
    pub cov_12: f64,
    pub v_perp_min: f64,
    pub theta_min: f64,
    pub xi2: f64,
    /// Spin-wave density, only for rotor/spin-wave runs.
    pub n_sw: Option<f64>,
    /// Variance along the mean-spin direction.
    pub var_par: f64,
}

impl SqueezingPoint {
    /// Largest `k + 1` such that `ξ_R² < 1/k`; `None` when not squeezed.
    pub fn entanglement_depth(&self) -> Option<usize> {
        entanglement_depth(self.xi2)
    }
}

pub fn entanglement_depth(xi2: f64) -> Option<usize> {
    if !(xi2 < 1.0) || xi2 <= 0.0 {
        return None;
    }
    let k = (1.0 / xi2).ceil() as usize - 1;
    Some(k + 1)
}

pub fn squeezing_parameter(m: &CollectiveMoments) -> Result<SqueezingPoint> {
    let tm = min_transverse_variance(m)?;
    let nf = m.n as f64;
    let nn = m.mean_norm();
    let u = [m.mean[0] / nn, m.mean[1] / nn, m.mean[2] / nn];
    let c = m.covariance();
    let var_par: f64 =
        (0..3).flat_map(|a| (0..3).map(move |b| (a, b))).map(|(a, b)| u[a] * c[a][b] * u[b]).sum();
    Ok(SqueezingPoint {
        t: m.t,
        m_x: m.mean[0] / nf,
        var_e1: tm.var_e1 / nf,
        var_e2: tm.var_e2 / nf,
        cov_12: tm.cov_12 / nf,
        v_perp_min: tm.value / nf,
        theta_min: tm.theta,
        xi2: nf * tm.value / (nn * nn),
        n_sw: None,
        var_par: var_par / nf,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub model: String,
    pub solver: String,
    pub n: usize,
    pub seed: Option<u64>,
    #[serde(default)]
    pub adaptive: bool,
    #[serde(default)]
    pub extra: BTreeMap<String, String>,
}

/// Jackknife standard errors attached to a stochastic run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointError {
    pub m_x: f64,
    pub xi2: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub meta: SeriesMeta,
    pub points: Vec<SqueezingPoint>,
    #[serde(default)]
    pub errors: Option<Vec<PointError>>,
}

impl TimeSeries {
    pub fn new(meta: SeriesMeta) -> Self {
        Self { meta, points: Vec::new(), errors: None }
    }

    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn column(&self, f: impl Fn(&SqueezingPoint) -> f64) -> Vec<f64> {
        self.points.iter().map(f).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::Config("time series must have strictly increasing t".into()));
        }
        if !self.meta.adaptive && self.points.len() > 2 {
            let dt0 = self.points[1].t - self.points[0].t;
            let uniform = self
                .points
                .windows(2)
                .all(|w| ((w[1].t - w[0].t) - dt0).abs() <= 1e-9 * dt0.abs().max(1.0));
            if !uniform {
                return Err(Error::Config("non-uniform time grid not flagged adaptive".into()));
            }
        }
        if let Some(e) = &self.errors {
            if e.len() != self.points.len() {
                return Err(Error::Config("error column length mismatch".into()));
            }
        }
        Ok(())
    }

    /// Linear interpolation of `m_x` at time `t` (clamped to the grid).
    pub fn m_x_at(&self, t: f64) -> f64 {
        interp(&self.times(), &self.column(|p| p.m_x), t)
    }
}

pub(crate) fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    let i = xs.partition_point(|&v| v <= x) - 1;
    let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] * (1.0 - w) + ys[i + 1] * w
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    /// Time of the minimum transverse variance.
    pub t_min: f64,
    /// Time of the minimum squeezing parameter.
    pub t_opt: f64,
    pub v_perp_min: f64,
    pub xi2_min: f64,
}

/// Grid minima of `v_perp_min` and `xi2`, refined by a 3-point parabola.
pub fn find_optimum(ts: &TimeSeries) -> Result<Optimum> {
    if ts.points.len() < 3 {
        return Err(Error::InsufficientData("need at least 3 time points".into()));
    }
    let t = ts.times();
    let (t_min, v_perp_min) = refined_minimum(&t, &ts.column(|p| p.v_perp_min), "v_perp")?;
    let (t_opt, xi2_min) = refined_minimum(&t, &ts.column(|p| p.xi2), "xi2")?;
    Ok(Optimum { t_min, t_opt, v_perp_min, xi2_min })
}

pub(crate) fn refined_minimum(t: &[f64], y: &[f64], what: &'static str) -> Result<(f64, f64)> {
    let (i, _) = y
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(Error::InsufficientData("no finite values".into()))?;
    if i == 0 || i + 1 == y.len() {
        return Err(Error::ExtendWindow(what));
    }
    Ok(parabola_vertex(
        (t[i - 1], y[i - 1]),
        (t[i], y[i]),
        (t[i + 1], y[i + 1]),
    ))
}

/// Vertex of the parabola through three points; falls back to the middle point
/// when the points are collinear.
pub(crate) fn parabola_vertex(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> (f64, f64) {
    let d1 = (b.1 - a.1) / (b.0 - a.0);
    let d2 = (c.1 - b.1) / (c.0 - b.0);
    let curv = (d2 - d1) / (c.0 - a.0);
    if !(curv > 0.0) {
        return b;
    }
    // y = b.1 + d(x - b.0) + curv (x - b.0)(x - x_other) form, solved via Newton form.
    // p(x) = a.1 + d1 (x - a.0) + curv (x - a.0)(x - b.0)
    let x = 0.5 * (a.0 + b.0) - d1 / (2.0 * curv);
    let y = a.1 + d1 * (x - a.0) + curv * (x - a.0) * (x - b.0);
    (x, y)
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = norm(v);
    [v[0] / n, v[1] / n, v[2] / n]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Rotation by `angle` about the unit axis `u` (Rodrigues).
pub fn rotation_about(u: [f64; 3], angle: f64) -> [[f64; 3]; 3] {
    let (s, c) = angle.sin_cos();
    let k = 1.0 - c;
    [
        [c + u[0] * u[0] * k, u[0] * u[1] * k - u[2] * s, u[0] * u[2] * k + u[1] * s],
        [u[1] * u[0] * k + u[2] * s, c + u[1] * u[1] * k, u[1] * u[2] * k - u[0] * s],
        [u[2] * u[0] * k - u[1] * s, u[2] * u[1] * k + u[0] * s, c + u[2] * u[2] * k],
    ]
}

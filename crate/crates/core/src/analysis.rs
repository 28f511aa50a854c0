//! Exponent extraction and finite-size collapses.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::collective::{interp, TimeSeries};
use crate::error::{Error, Result};

/// Ordinary least squares `y = intercept + slope·x` with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
    pub rms_residual: f64,
    pub n: usize,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::InsufficientData(format!("linear fit needs >= 2 points, got {n}")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("linear fit needs distinct abscissae".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let s2 = if n > 2 { ssr / (nf - 2.0) } else { 0.0 };
    let sumx2: f64 = xs.iter().map(|x| x * x).sum();
    Ok(LinearFit {
        slope,
        intercept,
        slope_se: (s2 / sxx).sqrt(),
        intercept_se: (s2 * sumx2 / (nf * sxx)).sqrt(),
        rms_residual: (ssr / nf).sqrt(),
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    PowerLaw,
    Saturating,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: FitModel,
    pub exponent: f64,
    pub se: f64,
    pub window: [f64; 2],
    /// Prefactor of the power law, or `a` of the saturating model.
    pub prefactor: f64,
    /// `m_∞` of the saturating model.
    pub offset: Option<f64>,
    pub rms_residual: f64,
    pub n_points: usize,
}

/// Fits `y = c·x^{sign·exponent}` on log-log axes; `sign = -1` reports decay exponents.
pub fn fit_power_law(xs: &[f64], ys: &[f64], sign: f64) -> Result<ScalingFit> {
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(Error::InsufficientData("power-law fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let f = linear_fit(&lx, &ly)?;
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(ScalingFit {
        model: FitModel::PowerLaw,
        exponent: sign * f.slope,
        se: f.slope_se,
        window: [lo, hi],
        prefactor: f.intercept.exp(),
        offset: None,
        rms_residual: f.rms_residual,
        n_points: xs.len(),
    })
}

/// `m^x ∼ t^{−λ}` on `window`.
pub fn fit_lambda(ts: &TimeSeries, window: [f64; 2]) -> Result<ScalingFit> {
    let (t, m): (Vec<f64>, Vec<f64>) = ts
        .points
        .iter()
        .filter(|p| p.t >= window[0] && p.t <= window[1])
        .map(|p| (p.t, p.m_x))
        .unzip();
    if t.len() < 6 {
        return Err(Error::InsufficientData(format!(
            "lambda fit window [{}, {}] holds {} points, need 6",
            window[0],
            window[1],
            t.len()
        )));
    }
    fit_power_law(&t, &m, -1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropDetection {
    pub t_drop: f64,
    pub lambda_window: [f64; 2],
    pub lambda: ScalingFit,
}

/// Start of the default decay window, `2/J`.
pub const LAMBDA_WINDOW_START: f64 = 2.0;
pub const DROP_THRESHOLD: f64 = 0.5;

/// First time after `window[1]` at which `m^x` falls below `threshold` times
/// the power-law extrapolation fitted on `window`.
pub fn detect_drop(ts: &TimeSeries, window: [f64; 2], threshold: f64) -> Result<Option<f64>> {
    let fit = fit_lambda(ts, window)?;
    Ok(ts
        .points
        .iter()
        .find(|p| {
            p.t > window[1] && p.m_x < threshold * fit.prefactor * p.t.powf(-fit.exponent)
        })
        .map(|p| p.t))
}

/// Self-consistent default window `[2/J, 0.6·t_drop]`: the drop is first
/// located from a short early fit, then window and drop are iterated.
pub fn default_lambda_fit(ts: &TimeSeries, threshold: f64) -> Result<DropDetection> {
    let lo = LAMBDA_WINDOW_START;
    let mut hi = 2.0 * lo;
    let mut t_drop = f64::NAN;
    for _ in 0..8 {
        let Some(td) = detect_drop(ts, [lo, hi], threshold)? else {
            return Err(Error::InsufficientData("no finite-size drop".into()));
        };
        let new_hi = (0.6 * td).max(2.0 * lo);
        let converged = td == t_drop;
        t_drop = td;
        hi = new_hi;
        if converged {
            break;
        }
    }
    let lambda = fit_lambda(ts, [lo, hi])?;
    Ok(DropDetection { t_drop, lambda_window: [lo, hi], lambda })
}

/// Thermodynamic-limit decay exponent from a size sweep: the largest system is
/// fitted from `t_lo` until it departs from the next-largest by more than
/// `eps` (relative), i.e. on the time range already free of finite-size effects.
pub fn fit_lambda_envelope(series: &[TimeSeries], t_lo: f64, eps: f64) -> Result<ScalingFit> {
    if series.len() < 2 {
        return Err(Error::InsufficientData("envelope fit needs at least two sizes".into()));
    }
    let mut order: Vec<&TimeSeries> = series.iter().collect();
    order.sort_by_key(|s| s.meta.n);
    let big = order[order.len() - 1];
    let next = order[order.len() - 2];
    let (tn, mn) = (next.times(), next.column(|p| p.m_x));
    let t_conv = big
        .points
        .iter()
        .filter(|p| p.t >= t_lo)
        .find(|p| ((p.m_x - interp(&tn, &mn, p.t)) / p.m_x).abs() > eps)
        .map(|p| p.t)
        .unwrap_or_else(|| big.points.last().map(|p| p.t).unwrap_or(t_lo));
    fit_lambda(big, [t_lo, t_conv])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimumPoint {
    pub n: usize,
    pub xi2_min: f64,
    pub t_min: f64,
    pub v_perp_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumScaling {
    /// `(ξ²)_min ∼ N^{−ν}`.
    pub nu: ScalingFit,
    /// `t_min ∼ N^{μ}`.
    pub mu: ScalingFit,
    /// `v_⊥,min ∼ N^{−ν₀}`.
    pub nu0: ScalingFit,
    pub scalable: bool,
}

pub fn fit_optimum_scaling(points: &[OptimumPoint]) -> Result<OptimumScaling> {
    if points.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "optimum scaling needs >= 4 sizes, got {}",
            points.len()
        )));
    }
    let mut p = points.to_vec();
    p.sort_by_key(|q| q.n);
    let ns: Vec<f64> = p.iter().map(|q| q.n as f64).collect();
    let col = |f: fn(&OptimumPoint) -> f64| p.iter().map(f).collect::<Vec<_>>();
    let xi = col(|q| q.xi2_min);
    let scalable = xi.windows(2).all(|w| w[1] < w[0]);
    if !scalable {
        warn!("no scalable squeezing: (xi2)_min is not decreasing with N");
    }
    Ok(OptimumScaling {
        nu: fit_power_law(&ns, &xi, -1.0)?,
        mu: fit_power_law(&ns, &col(|q| q.t_min), 1.0)?,
        nu0: fit_power_law(&ns, &col(|q| q.v_perp_min), -1.0)?,
        scalable,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentRelation {
    /// `ν − (ν₀ − 2λμ)`.
    pub residual: f64,
    pub nu_predicted: f64,
    /// Rotor/spin-wave form `(1 − λ)·ν₀`.
    pub nu_rsw: f64,
}

pub fn check_exponent_relation(nu: f64, nu0: f64, lambda: f64, mu: f64) -> ExponentRelation {
    let nu_predicted = nu0 - 2.0 * lambda * mu;
    ExponentRelation { residual: nu - nu_predicted, nu_predicted, nu_rsw: (1.0 - lambda) * nu0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseEntry {
    pub l: usize,
    pub time: f64,
    /// `time / L` for drop collapses, `time` for decay-time collapses.
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseReport {
    pub entries: Vec<CollapseEntry>,
    pub mean: f64,
    /// `(max − min) / mean` of the scaled times.
    pub spread: f64,
}

fn collapse(entries: Vec<CollapseEntry>) -> CollapseReport {
    let v: Vec<f64> = entries.iter().map(|e| e.scaled).collect();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    CollapseReport { entries, mean, spread: (hi - lo) / mean }
}

/// `t_drop(L)/L` across sizes.
pub fn drop_time_collapse(series: &[(usize, TimeSeries)], threshold: f64) -> Result<CollapseReport> {
    let mut entries = Vec::with_capacity(series.len());
    for (l, ts) in series {
        let d = default_lambda_fit(ts, threshold).map_err(|e| match e {
            Error::InsufficientData(_) => Error::InsufficientData(format!("no finite-size drop at L = {l}")),
            other => other,
        })?;
        entries.push(CollapseEntry { l: *l, time: d.t_drop, scaled: d.t_drop / *l as f64 });
    }
    Ok(collapse(entries))
}

/// First time `m^x` falls to `fraction · m^x(0)`, linearly interpolated.
pub fn decay_time(ts: &TimeSeries, fraction: f64) -> Result<f64> {
    let m0 = ts.points.first().ok_or(Error::InsufficientData("empty series".into()))?.m_x;
    let target = fraction * m0;
    ts.points
        .windows(2)
        .find(|w| w[1].m_x <= target)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            if a.m_x <= target {
                a.t
            } else {
                a.t + (b.t - a.t) * (a.m_x - target) / (a.m_x - b.m_x)
            }
        })
        .ok_or(Error::InsufficientData("magnetization never decays to the threshold".into()))
}

/// Decay times `τ(L)`; an `L`-independent `τ` collapses `m^x(t/τ)`.
pub fn decay_time_collapse(series: &[(usize, TimeSeries)], fraction: f64) -> Result<CollapseReport> {
    let entries = series
        .iter()
        .map(|(l, ts)| {
            decay_time(ts, fraction).map(|tau| CollapseEntry { l: *l, time: tau, scaled: tau })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(collapse(entries))
}

/// `m(N) = m_∞ − a N^{−σ}`: linear least squares in `(m_∞, a)` nested inside a
/// golden-section search over `σ`.
pub fn fit_saturating(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "saturating fit needs >= 5 sizes, got {}",
            points.len()
        )));
    }
    let ssr = |sigma: f64| -> (f64, LinearFit) {
        let xs: Vec<f64> = points.iter().map(|&(n, _)| n.powf(-sigma)).collect();
        let ys: Vec<f64> = points.iter().map(|&(_, m)| m).collect();
        match linear_fit(&xs, &ys) {
            Ok(f) => (f.rms_residual, f),
            Err(_) => (f64::INFINITY, LinearFit {
                slope: 0.0, intercept: 0.0, slope_se: 0.0, intercept_se: 0.0, rms_residual: f64::INFINITY, n: 0,
            }),
        }
    };
    // coarse log scan, then golden refinement around the best bracket
    let grid: Vec<f64> = (0..=200).map(|k| 10f64.powf(-3.0 + 4.0 * k as f64 / 200.0)).collect();
    let vals: Vec<f64> = grid.iter().map(|&s| ssr(s).0).collect();
    let i = (0..grid.len()).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    let (a, b) = (grid[i.saturating_sub(1)], grid[(i + 1).min(grid.len() - 1)]);
    let (sigma, _) = crate::rotor::golden_section(&|s: f64| ssr(s).0, a, b, 1e-12);
    let (rms, lin) = ssr(sigma);
    let sigma_se = saturating_sigma_se(points, lin.intercept, -lin.slope, sigma);
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(ScalingFit {
        model: FitModel::Saturating,
        exponent: sigma,
        se: sigma_se,
        window: [lo, hi],
        prefactor: -lin.slope,
        offset: Some(lin.intercept),
        rms_residual: rms,
        n_points: points.len(),
    })
}

/// Standard error of `σ` from the Gauss–Newton covariance `s² (JᵀJ)⁻¹`.
fn saturating_sigma_se(points: &[(f64, f64)], m_inf: f64, a: f64, sigma: f64) -> f64 {
    let mut jtj = nalgebra::Matrix3::<f64>::zeros();
    let mut ssr = 0.0;
    for &(n, m) in points {
        let p = n.powf(-sigma);
        // ∂/∂(m_∞, a, σ) of m_∞ − a N^{−σ}
        let g = nalgebra::Vector3::new(1.0, -p, a * p * n.ln());
        jtj += g * g.transpose();
        ssr += (m - (m_inf - a * p)).powi(2);
    }
    let dof = points.len() as f64 - 3.0;
    match jtj.try_inverse() {
        Some(inv) if dof > 0.0 => (ssr / dof * inv[(2, 2)]).max(0.0).sqrt(),
        _ => f64::NAN,
    }
}

//! Solver dispatch shared by the subcommands and the campaign runner.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use squeeze_core::analysis::{
    check_exponent_relation, fit_lambda_envelope, fit_optimum_scaling, fit_power_law, ExponentRelation,
    OptimumPoint, OptimumScaling, ScalingFit,
};
use squeeze_core::collective::{find_optimum, TimeSeries};
use squeeze_core::dtwa::{run_ensemble, DtwaOptions};
use squeeze_core::ed::{ed_quench, tower_energies, tower_points, EdSystem, QuenchOptions, TowerLevel};
use squeeze_core::lattice::CouplingMatrix;
use squeeze_core::rotor::{oat_optimum, oat_series, OatOptimum, RotorModel};
use squeeze_core::rsw::{bare_inertia, dispersion, rescale_inertia, rsw_quench, tos_fit, TosFit};
use squeeze_core::{Error, Exec, Result};

use crate::config::{InertiaMode, Method, ModelConfig, RunConfig};

/// Sectors entering the tower fit: `|J^z| ≤ N/4`.
pub fn tos_window(n: usize) -> f64 {
    (n / 4) as f64
}

pub fn ed_tower(model: &ModelConfig, n_levels: usize, max_bytes: u64, exec: Exec) -> Result<Vec<TowerLevel>> {
    let cm = model.couplings()?;
    let sys = EdSystem::new(&cm, model.delta, max_bytes, exec)?;
    tower_energies(&sys, n_levels, exec)
}

/// Tower-of-states fit at the model's own size.
pub fn tos_inertia(model: &ModelConfig, max_bytes: u64, exec: Exec) -> Result<TosFit> {
    let tower = ed_tower(model, 1, max_bytes, exec)?;
    let n = model.geometry().n_sites();
    tos_fit(&tower_points(&tower, tos_window(n)))
}

/// Rotor coupling `χ = 1/(2I)` for an RSW run.
pub fn resolve_inertia(model: &ModelConfig, cm: &CouplingMatrix, mode: InertiaMode, max_bytes: u64, exec: Exec) -> Result<RotorModel> {
    let n = cm.n_sites();
    match mode {
        InertiaMode::Bare => Ok(bare_inertia(cm, model.delta)),
        InertiaMode::Tos => RotorModel::new(n, tos_inertia(model, max_bytes, exec)?.chi),
        InertiaMode::RescaledFrom(l0) => {
            let small = model.with_size(l0);
            let chi0 = tos_inertia(&small, max_bytes, exec)?.chi;
            RotorModel::new(n, rescale_inertia(chi0, &small.couplings()?, cm)?)
        }
    }
}

/// Default OAT coupling for a model with `n` spins: `J0 (1 − Δ) / (2 (N − 1))`.
pub fn oat_chi(model: &ModelConfig, n: usize) -> Result<f64> {
    let j0 = model.couplings()?.j0;
    Ok(j0 * (1.0 - model.delta) / (2.0 * (n as f64 - 1.0)))
}

pub struct QuenchOutput {
    pub series: TimeSeries,
    pub diagnostics: Value,
}

pub fn run_quench(cfg: &RunConfig, max_bytes: u64, exec: Exec) -> Result<QuenchOutput> {
    cfg.validate()?;
    let grid = cfg.solver.t_grid()?;
    let s = &cfg.solver;
    match s.method {
        Method::Oat => {
            let chi = match s.chi {
                Some(c) => c,
                None => oat_chi(&cfg.model, s.n)?,
            };
            let series = oat_series(RotorModel::new(s.n, chi)?, &grid, exec)?;
            Ok(QuenchOutput { series, diagnostics: json!({ "chi": chi }) })
        }
        Method::Ed => {
            let cm = cfg.model.couplings()?;
            let sys = EdSystem::new(&cm, cfg.model.delta, max_bytes, exec)?;
            let run = ed_quench(&sys, &grid, &QuenchOptions::default(), exec)?;
            let mut series = run.series;
            series.meta.model = cfg.model.label();
            Ok(QuenchOutput { series, diagnostics: json!({ "conservation": run.conservation }) })
        }
        Method::Rsw => {
            let cm = cfg.model.couplings()?;
            let rotor = resolve_inertia(&cfg.model, &cm, s.inertia, max_bytes, exec)?;
            let sw = dispersion(&cm, cfg.model.delta)?.with_rotor(rotor);
            let mut series = rsw_quench(&sw, &grid, exec)?;
            series.meta.model = cfg.model.label();
            series.meta.extra.insert("inertia".into(), s.inertia.to_string());
            series.meta.extra.insert("chi".into(), rotor.chi.to_string());
            let diagnostics = json!({
                "chi": rotor.chi,
                "inertia": s.inertia.to_string(),
                "max_spin_wave_density": sw.max_density(),
            });
            Ok(QuenchOutput { series, diagnostics })
        }
        Method::Dtwa => {
            let cm = cfg.model.couplings()?;
            let opts = DtwaOptions { n_traj: s.ntraj, seed: s.seed, dt: s.dt, ..Default::default() };
            let run = run_ensemble(&cm, cfg.model.delta, &grid, &opts, exec)?;
            let mut series = run.series;
            series.meta.model = cfg.model.label();
            Ok(QuenchOutput { series, diagnostics: json!({ "dt": run.dt, "energy_drift": run.energy_drift }) })
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OatScaling {
    pub optima: Vec<OatOptimum>,
    /// Exponent of `ξ²_min ∝ N^{−ν₀}`.
    pub nu0: ScalingFit,
    /// Exponent of `v_⊥,min ∝ N^{−ν₀}`.
    pub nu0_variance: ScalingFit,
    /// Exponent of `t_min ∝ N^{μ}` with `χ ∝ 1/(N − 1)`.
    pub mu: ScalingFit,
    /// Relative spread `(max − min)/mean` of `ξ²_min · t_opt²`.
    pub product_spread: f64,
}

/// OAT optima over `ns` with `χ = chi_scale / (N − 1)`.
pub fn oat_scaling(ns: &[usize], chi_scale: f64, exec: Exec) -> Result<OatScaling> {
    if ns.len() < 2 {
        return Err(Error::InsufficientData("OAT scaling needs at least two sizes".into()));
    }
    let optima = exec
        .map(ns, |&n| oat_optimum(n, chi_scale / (n as f64 - 1.0)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = optima.iter().map(|o| o.n as f64).collect();
    let col = |f: fn(&OatOptimum) -> f64| optima.iter().map(f).collect::<Vec<_>>();
    let prod = col(|o| o.xi2_min * o.t_opt * o.t_opt);
    let mean = prod.iter().sum::<f64>() / prod.len() as f64;
    let spread = (prod.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - prod.iter().cloned().fold(f64::INFINITY, f64::min))
        / mean;
    Ok(OatScaling {
        nu0: fit_power_law(&x, &col(|o| o.xi2_min), -1.0)?,
        nu0_variance: fit_power_law(&x, &col(|o| o.v_perp_min), -1.0)?,
        mu: fit_power_law(&x, &col(|o| o.t_min), 1.0)?,
        product_spread: spread,
        optima,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingReport {
    pub points: Vec<OptimumPoint>,
    pub scaling: OptimumScaling,
    /// Magnetization decay exponent from the largest size.
    pub lambda: Option<ScalingFit>,
    /// OAT `ξ²` exponent over the same spin numbers.
    pub nu0_eff: f64,
    /// `(1 − λ) ν₀,eff`.
    pub nu_predicted: Option<f64>,
    /// `ν − (ν₀,eff − 2λμ)`.
    pub relation: Option<ExponentRelation>,
}

/// Optimum scaling, decay exponent and exponent relation for a size sweep.
pub fn scaling_report(series: &[TimeSeries], t_lo: f64, eps: f64) -> Result<ScalingReport> {
    let mut points = Vec::with_capacity(series.len());
    for ts in series {
        let o = find_optimum(ts)?;
        points.push(OptimumPoint { n: ts.meta.n, xi2_min: o.xi2_min, t_min: o.t_min, v_perp_min: o.v_perp_min });
    }
    let scaling = fit_optimum_scaling(&points)?;
    let ns: Vec<usize> = points.iter().map(|p| p.n).collect();
    let nu0_eff = oat_scaling(&ns, 1.0, Exec::default())?.nu0.exponent;
    let lambda = match fit_lambda_envelope(series, t_lo, eps) {
        Ok(f) => Some(f),
        Err(e) => {
            log::warn!("no decay exponent: {e}");
            None
        }
    };
    let relation = lambda.map(|l| {
        check_exponent_relation(scaling.nu.exponent, nu0_eff, l.exponent, scaling.mu.exponent)
    });
    let nu_predicted = relation.map(|r| r.nu_rsw);
    Ok(ScalingReport { points, scaling, lambda, nu0_eff, nu_predicted, relation })
}

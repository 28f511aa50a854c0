//! Subcommand definitions and handlers.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use squeeze_core::ed::thermal::{thermal_solve, thermal_spectrum};
use squeeze_core::ed::{tower_points, EdSystem};
use squeeze_core::io::{load_series, write_json, write_table};
use squeeze_core::rsw::{bare_inertia, dispersion, rescale_inertia, rsw_spectrum, tos_fit};
use squeeze_core::{Error, Exec, Result};

use crate::campaign::{run_campaign, run_one, series_path, CampaignConfig};
use crate::config::{Family, InertiaMode, Method, ModelConfig, RunConfig};
use crate::runner::{ed_tower, oat_scaling, resolve_inertia, scaling_report, tos_inertia, tos_window};

const SERIES_HELP: &str = "\
Series CSV columns (one row per output time, times in 1/J):
  t           time
  m_x         <J^x>/N
  var_e1      Var(J.e1)/N, e1 = z x n
  var_e2      Var(J.e2)/N, e2 = n x e1
  cov_12      Cov(J.e1, J.e2)/N
  v_perp_min  minimum transverse variance / N
  theta_min   angle of the minimizing axis from e1, in (-pi/2, pi/2]
  xi2         squeezing parameter N Var_min / |<J>|^2 = v_perp_min / m^2
  n_sw        spin-wave density (rsw only, empty otherwise)
  var_par     variance along the mean spin / N
  m_x_err     jackknife error of m_x (dtwa only)
  xi2_err     jackknife error of xi2 (dtwa only)
n is the unit mean-spin direction and m = |<J>|/N. A <stem>.json sidecar
holds the series metadata and <stem>.manifest.json the configuration, hashes
and diagnostics.";

#[derive(Debug, Parser)]
#[command(name = "squeeze", version, about = "Spin squeezing in 2D XXZ lattices: ED, rotor/spin-wave, DTWA and OAT")]
pub struct Cli {
    /// Memory budget for ED Hamiltonians, in GiB.
    #[arg(long, global = true, default_value_t = 4.0)]
    pub max_gib: f64,
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quench from the x-polarized coherent state and write the squeezing series.
    #[command(after_long_help = SERIES_HELP)]
    Quench(QuenchArgs),
    /// Lowest ED energies per J^z sector and the tower-of-states fit.
    Tower(TowerArgs),
    /// Temperature whose thermal energy equals the coherent-state energy.
    Tcss(ThermalArgs),
    /// Thermal Var(J^x)/N at T_CSS, optionally on a temperature list.
    ThermalVarjx(ThermalArgs),
    /// Low-energy spectrum from rotor/spin-wave theory or ED.
    Spectrum(SpectrumArgs),
    /// Bare, tower-fitted and rescaled rotor couplings 1/(2I).
    Inertia(InertiaArgs),
    /// Optimal one-axis-twisting squeezing versus N and its exponents.
    OatScaling(OatScalingArgs),
    /// Exponents from a set of series CSVs of different sizes.
    #[command(after_long_help = SERIES_HELP)]
    ScalingFit(ScalingFitArgs),
    /// Size sweep from a campaign TOML file, skipping completed runs.
    Campaign(CampaignArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Lattice side.
    #[arg(long = "L")]
    pub l: Option<usize>,
    /// Second lattice side (defaults to L).
    #[arg(long)]
    pub ly: Option<usize>,
    /// Anisotropy Δ.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Coupling scale J.
    #[arg(long = "J")]
    pub j: Option<f64>,
    /// Power-law exponent.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Rydberg blockade radius.
    #[arg(long)]
    pub rb: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Output file stem.
    #[arg(long)]
    pub stem: Option<String>,
}

impl ModelArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let m = &mut cfg.model;
        if let Some(v) = self.family {
            m.family = v;
        }
        if let Some(v) = self.l {
            m.l = v;
        }
        if self.ly.is_some() {
            m.ly = self.ly;
        }
        if let Some(v) = self.delta {
            m.delta = v;
        }
        if let Some(v) = self.j {
            m.j = v;
        }
        if let Some(v) = self.alpha {
            m.alpha = v;
        }
        if let Some(v) = self.rb {
            m.rb = v;
        }
        if let Some(v) = &self.out_dir {
            cfg.output.dir = v.clone();
        }
        if self.stem.is_some() {
            cfg.output.stem = self.stem.clone();
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct QuenchArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Spin number for oat runs.
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// OAT coupling χ (default J0(1-Δ)/(2(N-1))).
    #[arg(long)]
    pub chi: Option<f64>,
    #[arg(long)]
    pub tmax: Option<f64>,
    /// Output time spacing.
    #[arg(long)]
    pub t_step: Option<f64>,
    /// DTWA integrator step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// DTWA trajectories.
    #[arg(long)]
    pub ntraj: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// bare, tos or rescaled-from:L0.
    #[arg(long)]
    pub inertia: Option<InertiaMode>,
}

impl QuenchArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = self.model.resolve()?;
        let s = &mut cfg.solver;
        if let Some(v) = self.method {
            s.method = v;
        }
        if let Some(v) = self.n {
            s.n = v;
        }
        if self.chi.is_some() {
            s.chi = self.chi;
        }
        if let Some(v) = self.tmax {
            s.tmax = v;
        }
        if let Some(v) = self.t_step {
            s.t_step = v;
        }
        if let Some(v) = self.dt {
            s.dt = v;
        }
        if let Some(v) = self.ntraj {
            s.ntraj = v;
        }
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = self.inertia {
            s.inertia = v;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct TowerArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Distinct levels per sector.
    #[arg(long, default_value_t = 2)]
    pub levels: usize,
    /// Largest |J^z| in the fit (default N/4).
    #[arg(long)]
    pub fit_max_jz: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ThermalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated temperatures for a thermal table.
    #[arg(long, value_delimiter = ',')]
    pub temps: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpectrumMethod {
    Rsw,
    Ed,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = SpectrumMethod::Rsw)]
    pub method: SpectrumMethod,
    /// bare, tos or rescaled-from:L0 (rsw only).
    #[arg(long, default_value = "tos")]
    pub inertia: InertiaMode,
    /// Largest number of spin-wave quanta (rsw only).
    #[arg(long, default_value_t = 1)]
    pub max_sw: usize,
    /// Largest |J^z| (default N/2).
    #[arg(long)]
    pub max_jz: Option<f64>,
    /// Distinct levels per sector (ed only).
    #[arg(long, default_value_t = 2)]
    pub levels: usize,
}

#[derive(Debug, Clone, Args)]
pub struct InertiaArgs {
    #[arg(long, value_enum, default_value_t = Family::Nn)]
    pub family: Family,
    /// Comma-separated anisotropies.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0.5")]
    pub deltas: Vec<f64>,
    /// Comma-separated blockade radii (rydberg family).
    #[arg(long, value_delimiter = ',', default_value = "1.5")]
    pub rbs: Vec<f64>,
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    /// Side of the lattice used for the tower fit.
    #[arg(long = "L0", default_value_t = 4)]
    pub l0: usize,
    /// Side the fitted coupling is rescaled to.
    #[arg(long = "L", default_value_t = 4)]
    pub l: usize,
    /// Skip the ED tower fit.
    #[arg(long)]
    pub bare_only: bool,
    /// Also write the table to this CSV file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OatScalingArgs {
    /// Comma-separated spin numbers.
    #[arg(long = "N", value_delimiter = ',')]
    pub ns: Vec<usize>,
    /// Log-spaced spin numbers as min:max:count.
    #[arg(long)]
    pub n_log: Option<String>,
    /// χ (N − 1), fixed across sizes.
    #[arg(long, default_value_t = 1.0)]
    pub chi_scale: f64,
    /// CSV of optima; the JSON report goes next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ScalingFitArgs {
    /// Series CSV files, one per size.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Start of the decay-exponent window.
    #[arg(long, default_value_t = 2.0)]
    pub t_lo: f64,
    /// Agreement of the two largest sizes that ends the window.
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    /// JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CampaignArgs {
    /// Campaign TOML file.
    pub config: PathBuf,
}

pub fn max_bytes(gib: f64) -> u64 {
    (gib * (1u64 << 30) as f64) as u64
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn aux_path(cfg: &RunConfig, kind: &str, ext: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(&cfg.output.dir)?;
    let stem = cfg.output.stem.clone().unwrap_or_else(|| format!("{kind}_{}", cfg.model.label()));
    Ok(cfg.output.dir.join(format!("{stem}.{ext}")))
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn run(cli: Cli) -> Result<()> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::default() };
    let mb = max_bytes(cli.max_gib);
    match cli.command {
        Command::Quench(a) => {
            let cfg = a.resolve()?;
            let (manifest, series) = run_one(&cfg, "quench", mb, exec)?;
            print_json(&json!({
                "series": series_path(&cfg),
                "points": series.points.len(),
                "wall_time_s": manifest.wall_time_s,
                "diagnostics": manifest.diagnostics,
            }))
        }
        Command::Tower(a) => {
            let cfg = a.model.resolve()?;
            let tower = ed_tower(&cfg.model, a.levels, mb, exec)?;
            let n = cfg.model.geometry().n_sites();
            let fit = tos_fit(&tower_points(&tower, a.fit_max_jz.unwrap_or(tos_window(n))))?;
            let path = aux_path(&cfg, "tower", "csv")?;
            let rows: Vec<Vec<f64>> = tower
                .iter()
                .flat_map(|l| l.energies.iter().enumerate().map(move |(k, &e)| vec![l.jz, k as f64, e]))
                .collect();
            write_table(create(&path)?, &["jz", "level", "energy"], &rows)?;
            let report = json!({ "tower": path, "fit": fit });
            write_json(&report, &path.with_extension("json"))?;
            print_json(&report)
        }
        Command::Tcss(a) => {
            let cfg = a.model.resolve()?;
            let r = thermal_solve(&cfg.model.couplings()?, cfg.model.delta, false, mb, exec)?;
            print_json(&json!({
                "ground_energy": r.ground_energy,
                "css_energy": r.css_energy,
                "t_css": r.t_css,
            }))
        }
        Command::ThermalVarjx(a) => {
            let cfg = a.model.resolve()?;
            let cm = cfg.model.couplings()?;
            let spec = thermal_spectrum(&cm, cfg.model.delta, true, mb, exec)?;
            let css_energy = -(cm.n_sites() as f64) * cm.j0 / 8.0;
            let t_css = spec.temperature_for_energy(css_energy, 1e-6)?;
            let var = spec.var_jx_per_spin(t_css)?;
            let mut report = json!({ "t_css": t_css, "css_energy": css_energy, "var_jx_per_spin": var });
            if !a.temps.is_empty() {
                let rows = a
                    .temps
                    .iter()
                    .map(|&t| Ok(vec![t, spec.energy(t), spec.var_jx_per_spin(t)?]))
                    .collect::<Result<Vec<_>>>()?;
                let path = aux_path(&cfg, "thermal", "csv")?;
                write_table(create(&path)?, &["T", "energy", "var_jx_per_spin"], &rows)?;
                report["table"] = json!(path);
            }
            print_json(&report)
        }
        Command::Spectrum(a) => spectrum(&a, mb, exec),
        Command::Inertia(a) => inertia(&a, mb, exec),
        Command::OatScaling(a) => {
            let mut ns = a.ns.clone();
            if let Some(spec) = &a.n_log {
                ns.extend(log_sizes(spec)?);
            }
            ns.sort_unstable();
            ns.dedup();
            let rep = oat_scaling(&ns, a.chi_scale, exec)?;
            if let Some(path) = &a.out {
                let rows: Vec<Vec<f64>> = rep
                    .optima
                    .iter()
                    .map(|o| vec![o.n as f64, o.chi, o.xi2_min, o.t_opt, o.t_min, o.v_perp_min])
                    .collect();
                write_table(create(path)?, &["n", "chi", "xi2_min", "t_opt", "t_min", "v_perp_min"], &rows)?;
                write_json(&rep, &path.with_extension("json"))?;
            }
            print_json(&json!({
                "nu0": rep.nu0,
                "nu0_variance": rep.nu0_variance,
                "mu": rep.mu,
                "product_spread": rep.product_spread,
            }))
        }
        Command::ScalingFit(a) => {
            let series = a.inputs.iter().map(|p| load_series(p)).collect::<Result<Vec<_>>>()?;
            let rep = scaling_report(&series, a.t_lo, a.eps)?;
            if let Some(path) = &a.out {
                write_json(&rep, path)?;
            }
            print_json(&serde_json::to_value(&rep)?)
        }
        Command::Campaign(a) => {
            let c = CampaignConfig::load(&a.config)?;
            let rep = run_campaign(&c, mb, exec)?;
            print_json(&serde_json::to_value(&rep)?)?;
            if rep.failed() {
                let failed: Vec<String> = rep.runs.iter().filter(|r| r.status != "ok").map(|r| r.stem.clone()).collect();
                return Err(Error::Numerical(format!(
                    "campaign incomplete: failed runs [{}]{}",
                    failed.join(", "),
                    rep.analysis_error.map(|e| format!(", analysis: {e}")).unwrap_or_default()
                )));
            }
            Ok(())
        }
    }
}

/// `min:max:count` → log-spaced distinct integers.
pub fn log_sizes(spec: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Config(format!("--n-log expects min:max:count, got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    if !(lo >= 4.0 && hi > lo && count >= 2) {
        return Err(bad());
    }
    let mut ns: Vec<usize> = (0..count)
        .map(|k| (lo * (hi / lo).powf(k as f64 / (count - 1) as f64)).round() as usize)
        .collect();
    ns.dedup();
    Ok(ns)
}

fn spectrum(a: &SpectrumArgs, mb: u64, exec: Exec) -> Result<()> {
    let cfg = a.model.resolve()?;
    let cm = cfg.model.couplings()?;
    let n = cm.n_sites();
    let max_jz = a.max_jz.unwrap_or(0.5 * n as f64);
    let path = aux_path(&cfg, "spectrum", "csv")?;
    match a.method {
        SpectrumMethod::Ed => {
            let sys = EdSystem::new(&cm, cfg.model.delta, mb, exec)?;
            let tower = squeeze_core::ed::tower_energies(&sys, a.levels, exec)?;
            let rows: Vec<Vec<f64>> = tower
                .iter()
                .filter(|l| l.jz.abs() <= max_jz + 1e-9)
                .flat_map(|l| l.energies.iter().enumerate().map(move |(k, &e)| vec![l.jz, k as f64, e]))
                .collect();
            write_table(create(&path)?, &["jz", "level", "energy"], &rows)?;
        }
        SpectrumMethod::Rsw => {
            let (rotor, e0) = match a.inertia {
                InertiaMode::Tos => {
                    let fit = tos_inertia(&cfg.model, mb, exec)?;
                    (fit.rotor(n), fit.e0)
                }
                mode => (resolve_inertia(&cfg.model, &cm, mode, mb, exec)?, -(n as f64) * cm.j0 / 8.0),
            };
            let sw = dispersion(&cm, cfg.model.delta)?.with_rotor(rotor);
            let spec = rsw_spectrum(&sw, e0, max_jz, a.max_sw);
            let rows: Vec<Vec<f64>> =
                spec.levels.iter().map(|l| vec![l.jz, l.n_sw as f64, l.energy]).collect();
            write_table(create(&path)?, &["jz", "n_sw_total", "energy"], &rows)?;
        }
    }
    print_json(&json!({ "spectrum": path }))
}

fn inertia(a: &InertiaArgs, mb: u64, exec: Exec) -> Result<()> {
    let params: Vec<(f64, f64)> = match a.family {
        Family::Rydberg => {
            let d = a.deltas.first().copied().unwrap_or(0.0);
            a.rbs.iter().map(|&rb| (rb, d)).collect()
        }
        Family::PowerLaw => a.deltas.iter().map(|&d| (a.alpha, d)).collect(),
        _ => a.deltas.iter().map(|&d| (f64::NAN, d)).collect(),
    };
    let mut rows = Vec::new();
    for (p, delta) in params {
        let model = ModelConfig {
            family: a.family,
            l: a.l0,
            delta,
            alpha: if a.family == Family::PowerLaw { p } else { 3.0 },
            rb: if a.family == Family::Rydberg { p } else { 1.5 },
            ..Default::default()
        };
        let cm0 = model.couplings()?;
        let target = model.with_size(a.l);
        let cm = target.couplings()?;
        let bare = bare_inertia(&cm, delta).chi;
        let (tos, rescaled) = if a.bare_only {
            (f64::NAN, f64::NAN)
        } else {
            let chi0 = tos_inertia(&model, mb, exec)?.chi;
            (chi0, rescale_inertia(chi0, &cm0, &cm)?)
        };
        rows.push(vec![p, delta, bare, tos, rescaled]);
    }
    let header = ["param", "delta", "bare", "tos", "rescaled"];
    if let Some(path) = &a.out {
        write_table(create(path)?, &header, &rows)?;
    }
    write_table(std::io::stdout().lock(), &header, &rows)
}

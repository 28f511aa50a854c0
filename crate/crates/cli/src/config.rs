//! Run configuration: TOML files with command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use squeeze_core::lattice::{build_couplings, CouplingMatrix, CouplingSpec, LatticeGeometry};
use squeeze_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Nn,
    PowerLaw,
    Rydberg,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ed,
    Rsw,
    Dtwa,
    Oat,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ed => "ed",
            Method::Rsw => "rsw",
            Method::Dtwa => "dtwa",
            Method::Oat => "oat",
        }
    }
}

/// Source of the rotor moment of inertia for RSW runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum InertiaMode {
    Bare,
    /// Tower-of-states fit by ED at the run size.
    Tos,
    /// Tower-of-states fit at side `L0`, rescaled to the run size.
    RescaledFrom(usize),
}

impl fmt::Display for InertiaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InertiaMode::Bare => write!(f, "bare"),
            InertiaMode::Tos => write!(f, "tos"),
            InertiaMode::RescaledFrom(l) => write!(f, "rescaled-from:{l}"),
        }
    }
}

impl FromStr for InertiaMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bare" => Ok(InertiaMode::Bare),
            "tos" => Ok(InertiaMode::Tos),
            _ => s
                .strip_prefix("rescaled-from:")
                .and_then(|l| l.parse().ok())
                .map(InertiaMode::RescaledFrom)
                .ok_or_else(|| format!("inertia mode must be bare, tos or rescaled-from:L0, got {s:?}")),
        }
    }
}

impl TryFrom<String> for InertiaMode {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<InertiaMode> for String {
    fn from(m: InertiaMode) -> String {
        m.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub family: Family,
    /// Linear size; the lattice is `l × ly`.
    pub l: usize,
    /// Second side, defaults to `l`.
    pub ly: Option<usize>,
    pub delta: f64,
    pub j: f64,
    /// Power-law exponent.
    pub alpha: f64,
    /// Rydberg blockade radius in lattice units.
    pub rb: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { family: Family::Nn, l: 4, ly: None, delta: 0.5, j: 1.0, alpha: 3.0, rb: 1.5 }
    }
}

impl ModelConfig {
    pub fn spec(&self) -> CouplingSpec {
        let base = match self.family {
            Family::Nn => CouplingSpec::nearest_neighbor(),
            Family::PowerLaw => CouplingSpec::power_law(self.alpha),
            Family::Rydberg => CouplingSpec::rydberg(self.rb),
            Family::Uniform => CouplingSpec::uniform(self.j),
        };
        CouplingSpec { j: self.j, ..base }
    }

    pub fn geometry(&self) -> LatticeGeometry {
        LatticeGeometry::rect(self.l, self.ly.unwrap_or(self.l))
    }

    pub fn couplings(&self) -> Result<CouplingMatrix> {
        build_couplings(self.geometry(), self.spec())
    }

    pub fn with_size(&self, l: usize) -> Self {
        Self { l, ly: self.ly.map(|_| l), ..self.clone() }
    }

    pub fn label(&self) -> String {
        let g = self.geometry();
        format!("{}_L{}x{}_d{}", self.spec().label(), g.lx, g.ly, self.delta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub method: Method,
    pub tmax: f64,
    /// Output spacing.
    pub t_step: f64,
    /// DTWA integrator step.
    pub dt: f64,
    pub ntraj: usize,
    pub seed: u64,
    pub inertia: InertiaMode,
    /// Spin number for `oat` runs.
    pub n: usize,
    /// OAT coupling; defaults to `J0 (1 − Δ) / (2 (N − 1))` of the model.
    pub chi: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::Ed,
            tmax: 10.0,
            t_step: 0.05,
            dt: 0.01,
            ntraj: 5000,
            seed: 1,
            inertia: InertiaMode::RescaledFrom(4),
            n: 100,
            chi: None,
        }
    }
}

impl SolverConfig {
    pub fn t_grid(&self) -> Result<Vec<f64>> {
        if !(self.t_step > 0.0) || !(self.tmax >= 0.0) {
            return Err(Error::Config("need t_step > 0 and tmax >= 0".into()));
        }
        let steps = (self.tmax / self.t_step + 1e-9).floor() as usize;
        Ok((0..=steps).map(|k| k as f64 * self.t_step).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// File stem; derived from model and solver when absent.
    pub stem: Option<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), stem: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub solver: SolverConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn stem(&self) -> String {
        if let Some(s) = &self.output.stem {
            return s.clone();
        }
        match self.solver.method {
            Method::Oat => format!("oat_N{}", self.solver.n),
            m => format!("{}_{}", m.name(), self.model.label()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.spec().validate()?;
        self.solver.t_grid()?;
        if self.solver.method == Method::Oat && self.solver.n < 2 {
            return Err(Error::Config("oat runs need N >= 2".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inertia_mode_parses() {
        assert_eq!("bare".parse::<InertiaMode>().unwrap(), InertiaMode::Bare);
        assert_eq!("rescaled-from:6".parse::<InertiaMode>().unwrap(), InertiaMode::RescaledFrom(6));
        assert!("rescaled-from:x".parse::<InertiaMode>().is_err());
        assert_eq!(InertiaMode::RescaledFrom(4).to_string(), "rescaled-from:4");
    }

    #[test]
    fn config_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.model.family = Family::Rydberg;
        cfg.model.ly = Some(6);
        cfg.solver.method = Method::Dtwa;
        cfg.solver.inertia = InertiaMode::Tos;
        cfg.solver.chi = Some(0.01);
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_files_take_defaults() {
        let cfg = RunConfig::from_toml("[model]\nl = 8\n[solver]\nmethod = \"rsw\"\n").unwrap();
        assert_eq!(cfg.model.l, 8);
        assert_eq!(cfg.model.delta, 0.5);
        assert_eq!(cfg.solver.method, Method::Rsw);
        assert!(RunConfig::from_toml("[model]\nsize = 8\n").is_err());
    }

    #[test]
    fn time_grid_includes_endpoint() {
        let s = SolverConfig { tmax: 1.0, t_step: 0.1, ..Default::default() };
        let g = s.t_grid().unwrap();
        assert_eq!(g.len(), 11);
        assert!((g[10] - 1.0).abs() < 1e-12);
    }
}

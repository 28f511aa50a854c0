//! Single runs with manifests, and idempotent size sweeps.

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use squeeze_core::collective::TimeSeries;
use squeeze_core::io::{load_series, save_series, sidecar_path, write_json};
use squeeze_core::{Error, Exec, Result};

use crate::config::{Method, RunConfig};
use crate::manifest::{manifest_path, Manifest};
use crate::runner::{run_quench, scaling_report, ScalingReport};

pub fn series_path(cfg: &RunConfig) -> PathBuf {
    cfg.output.dir.join(format!("{}.csv", cfg.stem()))
}

/// Runs one quench, writing `<stem>.csv`, its metadata sidecar and
/// `<stem>.manifest.json`. A failed run still leaves a manifest behind.
pub fn run_one(cfg: &RunConfig, command: &str, max_bytes: u64, exec: Exec) -> Result<(Manifest, TimeSeries)> {
    std::fs::create_dir_all(&cfg.output.dir)?;
    let mpath = manifest_path(&cfg.output.dir, &cfg.stem());
    let mut manifest = Manifest::new(command, cfg, exec.name());
    let start = Instant::now();
    let result = run_quench(cfg, max_bytes, exec).and_then(|out| {
        let path = series_path(cfg);
        save_series(&out.series, &path)?;
        manifest.diagnostics = out.diagnostics;
        manifest.add_output(&path)?;
        manifest.add_output(&sidecar_path(&path))?;
        Ok(out.series)
    });
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    match result {
        Ok(series) => {
            manifest.status = "ok".into();
            manifest.save(&mpath)?;
            Ok((manifest, series))
        }
        Err(e) => {
            manifest.status = "failed".into();
            manifest.error = Some(e.to_string());
            manifest.save(&mpath)?;
            Err(e)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub name: String,
    /// Lattice sides, or spin numbers for `oat` sweeps.
    pub sizes: Vec<usize>,
    /// Start of the decay-exponent window.
    pub t_lo: f64,
    /// Relative agreement of the two largest sizes that bounds the window.
    pub eps: f64,
    pub base: RunConfig,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self { name: "campaign".into(), sizes: Vec::new(), t_lo: 2.0, eps: 0.01, base: RunConfig::default() }
    }
}

impl CampaignConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        toml::from_str(&std::fs::read_to_string(path)?).map_err(|e| Error::Config(format!("campaign: {e}")))
    }

    pub fn run_config(&self, size: usize) -> RunConfig {
        let mut cfg = self.base.clone();
        if cfg.solver.method == Method::Oat {
            cfg.solver.n = size;
        } else {
            cfg.model = cfg.model.with_size(size);
        }
        cfg.output.stem = Some(format!("{}_{}", self.name, size));
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStatus {
    pub size: usize,
    pub stem: String,
    pub status: String,
    pub skipped: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignReport {
    pub name: String,
    pub runs: Vec<RunStatus>,
    pub analysis: Option<ScalingReport>,
    pub analysis_error: Option<String>,
}

impl CampaignReport {
    pub fn failed(&self) -> bool {
        self.runs.iter().any(|r| r.status != "ok") || self.analysis.is_none()
    }
}

/// Runs every size not already completed, then fits the sweep and writes
/// `<name>.report.json` to the output directory.
pub fn run_campaign(c: &CampaignConfig, max_bytes: u64, exec: Exec) -> Result<CampaignReport> {
    if c.sizes.is_empty() {
        return Err(Error::Config("campaign has no sizes".into()));
    }
    let configs: Vec<RunConfig> = c.sizes.iter().map(|&s| c.run_config(s)).collect();
    for cfg in &configs {
        cfg.validate()?;
    }
    let attempt = |cfg: &RunConfig| -> (RunStatus, Option<TimeSeries>) {
        let stem = cfg.stem();
        let size = if cfg.solver.method == Method::Oat { cfg.solver.n } else { cfg.model.l };
        let done = Manifest::load(&manifest_path(&cfg.output.dir, &stem))
            .map(|m| m.is_complete_for(cfg))
            .unwrap_or(false);
        let result = if done {
            load_series(&series_path(cfg)).map(|s| (s, true))
        } else {
            run_one(cfg, "campaign", max_bytes, exec).map(|(_, s)| (s, false))
        };
        match result {
            Ok((s, skipped)) => {
                (RunStatus { size, stem, status: "ok".into(), skipped, error: None }, Some(s))
            }
            Err(e) => {
                log::error!("run {stem} failed: {e}");
                (RunStatus { size, stem, status: "failed".into(), skipped: false, error: Some(e.to_string()) }, None)
            }
        }
    };
    // ED runs one at a time under the shared memory budget
    let results: Vec<(RunStatus, Option<TimeSeries>)> = if c.base.solver.method == Method::Ed {
        configs.iter().map(attempt).collect()
    } else {
        exec.map(&configs, attempt)
    };
    let series: Vec<TimeSeries> = results.iter().filter_map(|(_, s)| s.clone()).collect();
    let (analysis, analysis_error) = match scaling_report(&series, c.t_lo, c.eps) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = CampaignReport {
        name: c.name.clone(),
        runs: results.into_iter().map(|(r, _)| r).collect(),
        analysis,
        analysis_error,
    };
    write_json(&report, &c.base.output.dir.join(format!("{}.report.json", c.name)))?;
    Ok(report)
}

use std::path::Path;
use std::process::{Command, Output};

use squeeze_cli::campaign::CampaignReport;
use squeeze_cli::config::{InertiaMode, Method, RunConfig};
use squeeze_cli::manifest::{config_hash, file_hash, Manifest};

fn squeeze(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_squeeze")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn dtwa(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "quench", "--method", "dtwa", "--L", "3", "--delta", "0.3", "--tmax", "1", "--t-step", "0.1", "--ntraj",
        "200", "--stem", "run", "--out-dir",
    ];
    args.push(dir.to_str().unwrap());
    args.extend_from_slice(extra);
    squeeze(&args)
}

#[test]
fn config_round_trips_through_toml() {
    let mut cfg = RunConfig::default();
    cfg.model.delta = -0.25;
    cfg.model.ly = Some(6);
    cfg.solver.method = Method::Rsw;
    cfg.solver.inertia = InertiaMode::RescaledFrom(4);
    let text = cfg.to_toml().unwrap();
    assert!(text.contains("rescaled-from:4"));
    assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    assert!(RunConfig::from_toml("[model]\nbogus = 1\n").is_err());
}

#[test]
fn dtwa_runs_are_reproducible_across_executors() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    stdout_json(&dtwa(a.path(), &["--seed", "7"]));
    stdout_json(&dtwa(b.path(), &["--seed", "7", "--sequential"]));
    let ha = file_hash(&a.path().join("run.csv")).unwrap();
    let hb = file_hash(&b.path().join("run.csv")).unwrap();
    assert_eq!(ha, hb);

    let m = Manifest::load(&a.path().join("run.manifest.json")).unwrap();
    assert_eq!(m.status, "ok");
    assert_eq!(m.seed, Some(7));
    assert_eq!(m.config_hash, config_hash(&m.config));
    assert!(m.outputs.iter().any(|o| o.sha256 == ha));
    assert!(m.is_complete_for(&m.config));

    let c = tempfile::tempdir().unwrap();
    stdout_json(&dtwa(c.path(), &["--seed", "8"]));
    assert_ne!(ha, file_hash(&c.path().join("run.csv")).unwrap());
}

#[test]
fn series_csv_has_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = squeeze(&[
        "quench", "--method", "oat", "--N", "50", "--tmax", "2", "--out-dir", dir.path().to_str().unwrap(),
    ]);
    let v = stdout_json(&out);
    let csv = std::fs::read_to_string(v["series"].as_str().unwrap()).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header, "t,m_x,var_e1,var_e2,cov_12,v_perp_min,theta_min,xi2,n_sw,var_par");
    assert_eq!(csv.lines().count(), 42);

    let help = String::from_utf8(squeeze(&["quench", "--help"]).stdout).unwrap();
    for col in header.split(',').chain(["m_x_err", "xi2_err"]) {
        assert!(help.contains(&format!("  {col} ")), "help lacks {col}");
    }
}

#[test]
fn campaign_skips_completed_runs() {
    let dir = tempfile::tempdir().unwrap();
    let toml = format!(
        "name = \"oat\"\nsizes = [32, 64, 128, 256]\n\n[base.solver]\nmethod = \"oat\"\ntmax = 12.0\nt_step = 0.05\n\n[base.output]\ndir = {:?}\n",
        dir.path().to_str().unwrap()
    );
    let path = dir.path().join("campaign.toml");
    std::fs::write(&path, toml).unwrap();
    let first: CampaignReport = serde_json::from_value(stdout_json(&squeeze(&["campaign", path.to_str().unwrap()]))).unwrap();
    assert!(first.runs.iter().all(|r| r.status == "ok" && !r.skipped));
    let analysis = first.analysis.expect("scaling analysis");
    assert!(analysis.scaling.nu.exponent > 0.5 && analysis.scaling.nu.exponent < 0.9);

    let csv = dir.path().join("oat_64.csv");
    let before = std::fs::metadata(&csv).unwrap().modified().unwrap();
    let second: CampaignReport = serde_json::from_value(stdout_json(&squeeze(&["campaign", path.to_str().unwrap()]))).unwrap();
    assert!(second.runs.iter().all(|r| r.skipped));
    assert_eq!(std::fs::metadata(&csv).unwrap().modified().unwrap(), before);

    std::fs::write(&csv, "tampered").unwrap();
    let third: CampaignReport = serde_json::from_value(stdout_json(&squeeze(&["campaign", path.to_str().unwrap()]))).unwrap();
    let rerun: Vec<usize> = third.runs.iter().filter(|r| !r.skipped).map(|r| r.size).collect();
    assert_eq!(rerun, vec![64]);
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(squeeze(&["quench", "--L", "1", "--out-dir", d]).status.code(), Some(2));
    assert_eq!(squeeze(&["quench", "--method", "nope"]).status.code(), Some(2));
    let mem = squeeze(&["quench", "--method", "ed", "--L", "8", "--out-dir", d]);
    assert_eq!(mem.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&mem.stderr).contains("memory"));
    let manifest = Manifest::load(&dir.path().join("ed_nn_L8x8_d0.5.manifest.json")).unwrap();
    assert_eq!(manifest.status, "failed");

    for n in ["40", "80"] {
        let stem = format!("short{n}");
        let out = squeeze(&["quench", "--method", "oat", "--N", n, "--tmax", "0.1", "--t-step", "0.02", "--stem", &stem, "--out-dir", d]);
        assert!(out.status.success());
    }
    let a = dir.path().join("short40.csv");
    let b = dir.path().join("short80.csv");
    let fit = squeeze(&["scaling-fit", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(fit.status.code(), Some(3));
}

#[test]
fn inertia_table_lists_bare_values() {
    let out = squeeze(&["inertia", "--deltas", "-0.5,0.5", "--bare-only"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "param,delta,bare,tos,rescaled");
    let bare: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!((bare[0] - 0.2).abs() < 1e-12 && (bare[1] - 4.0 / 60.0).abs() < 1e-12);
}

//! On-disk formats: `TimeSeries` as CSV with a JSON metadata sidecar.
//!
//! Columns, in order:
//! `t, m_x, var_e1, var_e2, cov_12, v_perp_min, theta_min, xi2, n_sw, var_par`
//! followed by `m_x_err, xi2_err` for stochastic runs. `n_sw` is empty for
//! solvers without spin waves. Floats are written in shortest round-trip form.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::collective::{PointError, SeriesMeta, SqueezingPoint, TimeSeries};
use crate::error::{Error, Result};

pub const BASE_COLUMNS: [&str; 10] = [
    "t",
    "m_x",
    "var_e1",
    "var_e2",
    "cov_12",
    "v_perp_min",
    "theta_min",
    "xi2",
    "n_sw",
    "var_par",
];
pub const ERROR_COLUMNS: [&str; 2] = ["m_x_err", "xi2_err"];

/// `run.csv` → `run.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn write_series_csv<W: std::io::Write>(ts: &TimeSeries, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = BASE_COLUMNS.to_vec();
    if ts.errors.is_some() {
        header.extend(ERROR_COLUMNS);
    }
    out.write_record(&header)?;
    for (i, p) in ts.points.iter().enumerate() {
        let mut rec = vec![
            p.t.to_string(),
            p.m_x.to_string(),
            p.var_e1.to_string(),
            p.var_e2.to_string(),
            p.cov_12.to_string(),
            p.v_perp_min.to_string(),
            p.theta_min.to_string(),
            p.xi2.to_string(),
            p.n_sw.map(|x| x.to_string()).unwrap_or_default(),
            p.var_par.to_string(),
        ];
        if let Some(e) = &ts.errors {
            rec.push(e[i].m_x.to_string());
            rec.push(e[i].xi2.to_string());
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `path` and its JSON sidecar holding the series metadata.
pub fn save_series(ts: &TimeSeries, path: &Path) -> Result<()> {
    ts.validate()?;
    let f = std::fs::File::create(path)?;
    write_series_csv(ts, std::io::BufWriter::new(f))?;
    write_json(&ts.meta, &sidecar_path(path))
}

pub fn read_series_csv<R: std::io::Read>(r: R, meta: SeriesMeta) -> Result<TimeSeries> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("missing column `{name}`")))
    };
    let idx: Vec<usize> = BASE_COLUMNS.iter().map(|c| col(c)).collect::<Result<_>>()?;
    let err_idx = match (col(ERROR_COLUMNS[0]), col(ERROR_COLUMNS[1])) {
        (Ok(a), Ok(b)) => Some((a, b)),
        _ => None,
    };
    let mut ts = TimeSeries::new(meta);
    let mut errors = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i).unwrap_or("").trim().parse::<f64>().map_err(|_| {
                Error::Config(format!("row {}: bad value in column `{}`", line + 2, &header[i]))
            })
        };
        let n_sw = match rec.get(idx[8]).unwrap_or("").trim() {
            "" => None,
            _ => Some(num(idx[8])?),
        };
        ts.points.push(SqueezingPoint {
            t: num(idx[0])?,
            m_x: num(idx[1])?,
            var_e1: num(idx[2])?,
            var_e2: num(idx[3])?,
            cov_12: num(idx[4])?,
            v_perp_min: num(idx[5])?,
            theta_min: num(idx[6])?,
            xi2: num(idx[7])?,
            n_sw,
            var_par: num(idx[9])?,
        });
        if let Some((a, b)) = err_idx {
            errors.push(PointError { m_x: num(a)?, xi2: num(b)? });
        }
    }
    if err_idx.is_some() {
        ts.errors = Some(errors);
    }
    Ok(ts)
}

/// Reads a series CSV; metadata comes from the sidecar when present.
pub fn load_series(path: &Path) -> Result<TimeSeries> {
    let side = sidecar_path(path);
    let meta = if side.exists() {
        serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(&side)?))?
    } else {
        SeriesMeta::default()
    };
    let ts = read_series_csv(std::io::BufReader::new(std::fs::File::open(path)?), meta)?;
    ts.validate()?;
    Ok(ts)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(f), value)?;
    Ok(())
}

/// Generic table writer for the auxiliary outputs (spectra, sweeps, towers).
pub fn write_table<W: std::io::Write>(w: W, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for r in rows {
        if r.len() != header.len() {
            return Err(Error::Config("table row width does not match header".into()));
        }
        out.write_record(r.iter().map(|x| x.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

//! Parameter sweeps: one independent run per value, a summary table of terminal
//! functionals, and log-log least-squares slopes.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::output::run_to_dir;
use crate::sim::{Row, RunError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "eps")]
    Eps,
    #[serde(rename = "kappa_q")]
    KappaQ,
    #[serde(rename = "r0")]
    R0,
    #[serde(rename = "r1")]
    R1,
    #[serde(rename = "N")]
    N,
    #[serde(rename = "dt")]
    Dt,
    #[serde(rename = "n_cutoff")]
    NCutoff,
    #[serde(rename = "K_cutoff")]
    KCutoff,
    #[serde(rename = "m_cutoff")]
    MCutoff,
}

impl Axis {
    pub const ALL: [Axis; 9] =
        [Axis::Eps, Axis::KappaQ, Axis::R0, Axis::R1, Axis::N, Axis::Dt, Axis::NCutoff, Axis::KCutoff, Axis::MCutoff];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Eps => "eps",
            Axis::KappaQ => "kappa_q",
            Axis::R0 => "r0",
            Axis::R1 => "r1",
            Axis::N => "N",
            Axis::Dt => "dt",
            Axis::NCutoff => "n_cutoff",
            Axis::KCutoff => "K_cutoff",
            Axis::MCutoff => "m_cutoff",
        }
    }

    /// Copy of `base` with this axis set to `value`.
    pub fn apply(self, base: &RunConfig, value: f64) -> Result<RunConfig, SweepError> {
        let mut c = base.clone();
        match self {
            Axis::Eps => c.params.eps = value,
            Axis::KappaQ => c.params.kappa_q = value,
            Axis::R0 => c.params.r0 = value,
            Axis::R1 => c.params.r1 = value,
            Axis::N => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(SweepError::BadValue { axis: self, value });
                }
                c.run.n_modes = value as usize;
            }
            Axis::Dt => c.run.dt = value,
            Axis::NCutoff => c.diagnostics.n_cutoff = value,
            Axis::KCutoff => c.diagnostics.k_cutoff = value,
            Axis::MCutoff => c.diagnostics.m_cutoff = value,
        }
        c.validate().map_err(|e| SweepError::Invalid { axis: self, value, message: e.to_string() })?;
        Ok(c)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = SweepError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Axis::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| SweepError::UnknownAxis(s.into()))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("unknown axis {0:?}; expected one of eps, kappa_q, r0, r1, N, dt, n_cutoff, K_cutoff, m_cutoff")]
    UnknownAxis(String),
    #[error("sweep needs at least one value")]
    EmptyValues,
    #[error("value {value} not valid for axis {axis}")]
    BadValue { axis: Axis, value: f64 },
    #[error("value {value} for axis {axis}: {message}")]
    Invalid { axis: Axis, value: f64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Terminal values of one child run; functionals are NaN when it failed early.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: Axis,
    pub value: f64,
    pub status: String,
    pub t: f64,
    #[serde(rename = "E_total")]
    pub e_total: f64,
    #[serde(rename = "E_kinetic")]
    pub e_kinetic: f64,
    #[serde(rename = "E_cold")]
    pub e_cold: f64,
    #[serde(rename = "E_capillary")]
    pub e_capillary: f64,
    #[serde(rename = "E_hyper")]
    pub e_hyper: f64,
    /// `E_cold + E_hyper`, the terms carrying an ε prefactor.
    #[serde(rename = "E_eps")]
    pub e_eps: f64,
    pub bd_entropy: f64,
    pub mv_n: f64,
    pub max_res_energy: f64,
    pub max_res_bd: f64,
    pub dir: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub metric: String,
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
    pub fits: Vec<Fit>,
}

impl SweepSummary {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.status != "completed").count()
    }

    pub fn fit(&self, metric: &str) -> Option<&Fit> {
        self.fits.iter().find(|f| f.metric == metric)
    }
}

pub const FIT_METRICS: [&str; 9] =
    ["E_total", "E_kinetic", "E_cold", "E_capillary", "E_hyper", "E_eps", "mv_n", "max_res_energy", "max_res_bd"];

/// Least-squares line through `(ln x, ln |y|)`, skipping zero or non-finite points.
/// Returns `(slope, intercept, points)`; needs two distinct abscissae.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, usize)> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && x.is_finite() && y.is_finite() && **y != 0.0)
        .map(|(x, y)| (x.ln(), y.abs().ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx, pts.len()))
}

fn max_abs(rows: &[Row], f: impl Fn(&Row) -> f64) -> f64 {
    rows.iter().map(|r| f(r).abs()).fold(0.0, f64::max)
}

fn summarize(axis: Axis, value: f64, dir: &Path, result: Result<crate::output::RunArtifacts, RunError>) -> SweepRow {
    let mut row = SweepRow {
        axis,
        value,
        status: "error".into(),
        t: f64::NAN,
        e_total: f64::NAN,
        e_kinetic: f64::NAN,
        e_cold: f64::NAN,
        e_capillary: f64::NAN,
        e_hyper: f64::NAN,
        e_eps: f64::NAN,
        bd_entropy: f64::NAN,
        mv_n: f64::NAN,
        max_res_energy: f64::NAN,
        max_res_bd: f64::NAN,
        dir: dir.display().to_string(),
        message: String::new(),
    };
    match result {
        Err(e) => row.message = e.to_string(),
        Ok(art) => {
            row.status = art.manifest.status.clone();
            row.message = art.manifest.message.clone().unwrap_or_default();
            let rows = &art.outcome.rows;
            if let (Some(last), None) = (rows.last(), &art.outcome.failure) {
                row.t = last.t;
                row.e_total = last.e_total;
                row.e_kinetic = last.e_kinetic;
                row.e_cold = last.e_cold;
                row.e_capillary = last.e_capillary;
                row.e_hyper = last.e_hyper;
                row.e_eps = last.e_cold + last.e_hyper;
                row.bd_entropy = last.bd_entropy;
                row.mv_n = last.mv_n;
                row.max_res_energy = max_abs(rows, |r| r.res_energy);
                row.max_res_bd = max_abs(rows, |r| r.res_bd);
            }
        }
    }
    row
}

fn metric(r: &SweepRow, name: &str) -> f64 {
    match name {
        "E_total" => r.e_total,
        "E_kinetic" => r.e_kinetic,
        "E_cold" => r.e_cold,
        "E_capillary" => r.e_capillary,
        "E_hyper" => r.e_hyper,
        "E_eps" => r.e_eps,
        "mv_n" => r.mv_n,
        "max_res_energy" => r.max_res_energy,
        "max_res_bd" => r.max_res_bd,
        _ => f64::NAN,
    }
}

/// Runs every value of the axis (concurrently) into `out/<axis>_<index>` and
/// writes `summary.csv` and `fits.csv`. Child failures are recorded, not fatal.
pub fn sweep(base: &RunConfig, axis: Axis, values: &[f64], out: &Path) -> Result<SweepSummary, SweepError> {
    if values.is_empty() {
        return Err(SweepError::EmptyValues);
    }
    let configs: Vec<RunConfig> = values.iter().map(|&v| axis.apply(base, v)).collect::<Result<_, _>>()?;
    fs::create_dir_all(out)?;
    let rows: Vec<SweepRow> = configs
        .par_iter()
        .zip(values)
        .enumerate()
        .map(|(i, (cfg, &v))| {
            let dir: PathBuf = out.join(format!("{}_{i:02}", axis.name()));
            let mut cfg = cfg.clone();
            cfg.run.output = Some(dir.clone());
            summarize(axis, v, &dir, run_to_dir(&cfg, &dir))
        })
        .collect();

    let completed: Vec<&SweepRow> = rows.iter().filter(|r| r.status == "completed").collect();
    let xs: Vec<f64> = completed.iter().map(|r| r.value).collect();
    let fits = FIT_METRICS
        .iter()
        .filter_map(|&m| {
            let ys: Vec<f64> = completed.iter().map(|r| metric(r, m)).collect();
            loglog_fit(&xs, &ys).map(|(slope, intercept, points)| Fit { metric: m.into(), slope, intercept, points })
        })
        .collect();

    let mut w = csv::Writer::from_path(out.join("summary.csv"))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(out.join("fits.csv"))?;
    for f in &fits {
        w.serialize(f)?;
    }
    w.flush()?;
    Ok(SweepSummary { rows, fits })
}

/// Parses `"1e-2,1e-3"` (commas and/or whitespace).
pub fn parse_values(s: &str) -> Result<Vec<f64>, String> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| format!("bad value {t:?}: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_power_law() {
        let xs = [1e-2, 1e-3, 1e-4];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        let (s, c, n) = loglog_fit(&xs, &ys).unwrap();
        assert!((s - 1.5).abs() < 1e-12 && (c - 3f64.ln()).abs() < 1e-10 && n == 3);
        assert!(loglog_fit(&[1.0], &[2.0]).is_none());
        assert!(loglog_fit(&[1.0, 1.0], &[2.0, 3.0]).is_none());
    }

    #[test]
    fn axis_names_round_trip() {
        for a in Axis::ALL {
            assert_eq!(a.name().parse::<Axis>().unwrap(), a);
        }
        assert!("kappa".parse::<Axis>().is_err());
    }

    #[test]
    fn values_parse() {
        assert_eq!(parse_values("1e-2, 1e-3 1e-4").unwrap(), vec![1e-2, 1e-3, 1e-4]);
        assert!(parse_values("1e-2,x").is_err());
        assert!(parse_values("").unwrap().is_empty());
    }
}

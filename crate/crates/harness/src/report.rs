//! Plain-text summaries of run and sweep directories.

use std::fmt::Write as _;
use std::path::Path;

use crate::output::{read_csv, RunManifest, CSV_NAME};
use crate::sim::{Row, RunError, COLUMNS};
use crate::sweep::{Fit, SweepRow};

fn column(r: &Row, name: &str) -> f64 {
    match name {
        "t" => r.t,
        "mass" => r.mass,
        "E_total" => r.e_total,
        "E_kinetic" => r.e_kinetic,
        "E_cold" => r.e_cold,
        "E_capillary" => r.e_capillary,
        "E_hyper" => r.e_hyper,
        "E_internal" => r.e_internal,
        "bd_entropy" => r.bd_entropy,
        "mv_n" => r.mv_n,
        "min_rho" => r.min_rho,
        "min_theta" => r.min_theta,
        "res_energy" => r.res_energy,
        "res_bd" => r.res_bd,
        "res_thermal" => r.res_thermal,
        _ => f64::NAN,
    }
}

/// Summary of a run directory (`manifest.json` + CSV) or a sweep directory
/// (`summary.csv` + `fits.csv`).
pub fn report(dir: &Path) -> Result<String, RunError> {
    if dir.join("summary.csv").exists() {
        return sweep_report(dir);
    }
    let mut s = String::new();
    let m = RunManifest::load(dir)?;
    writeln!(s, "run {}", dir.display()).ok();
    writeln!(s, "  version {}  status {}  termination {:?}", m.code_version, m.status, m.termination).ok();
    if let Some(msg) = &m.message {
        writeln!(s, "  message {msg}").ok();
    }
    if let Some(mv) = &m.mv_inequality {
        writeln!(s, "  mv inequality lhs {:.6e} rhs {:.6e} {}", mv.lhs, mv.rhs, if mv.pass { "pass" } else { "FAIL" })
            .ok();
    }
    let bad = m.verify(dir);
    writeln!(
        s,
        "  files {} ({})",
        m.files.len(),
        if bad.is_empty() { "hashes ok".into() } else { format!("MISMATCH: {}", bad.join(", ")) }
    )
    .ok();
    let rows = read_csv(&dir.join(CSV_NAME))?;
    writeln!(s, "  records {}", rows.len()).ok();
    if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
        writeln!(s, "  {:<12} {:>14} {:>14} {:>14}", "column", "first", "last", "max|.|").ok();
        for c in COLUMNS {
            let peak = rows.iter().map(|r| column(r, c).abs()).fold(0.0, f64::max);
            writeln!(s, "  {:<12} {:>14.6e} {:>14.6e} {:>14.6e}", c, column(first, c), column(last, c), peak).ok();
        }
    }
    Ok(s)
}

fn sweep_report(dir: &Path) -> Result<String, RunError> {
    let mut s = String::new();
    let rows: Vec<SweepRow> =
        csv::Reader::from_path(dir.join("summary.csv"))?.deserialize().collect::<Result<_, _>>()?;
    writeln!(s, "sweep {}", dir.display()).ok();
    writeln!(
        s,
        "  {:>10} {:>10} {:>14} {:>14} {:>14} {:>14}",
        "axis", "value", "status", "E_total", "E_eps", "max_res_E"
    )
    .ok();
    for r in &rows {
        writeln!(
            s,
            "  {:>10} {:>10.3e} {:>14} {:>14.6e} {:>14.6e} {:>14.6e}",
            r.axis.name(),
            r.value,
            r.status,
            r.e_total,
            r.e_eps,
            r.max_res_energy
        )
        .ok();
    }
    let fits_path = dir.join("fits.csv");
    if fits_path.exists() {
        let fits: Vec<Fit> = csv::Reader::from_path(fits_path)?.deserialize().collect::<Result<_, _>>()?;
        writeln!(s, "  log-log slopes").ok();
        for f in fits {
            writeln!(s, "    {:<16} {:>8.4} ({} points)", f.metric, f.slope, f.points).ok();
        }
    }
    Ok(s)
}

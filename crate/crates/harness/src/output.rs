//! On-disk artifacts: diagnostics CSV, binary state snapshots and the run manifest.
//!
//! Snapshot layout (all little-endian):
//!
//! | bytes            | content                     |
//! |------------------|-----------------------------|
//! | 5                | magic `NSFG1`               |
//! | 4 (u32)          | dim                         |
//! | 4 (u32)          | points per axis             |
//! | 8 (f64)          | box length                  |
//! | 4 (u32)          | N (scalar modes)            |
//! | 8 (f64)          | t                           |
//! | 8·points^dim     | ρ, row-major                |
//! | 8·N·dim          | λ, index `j·dim + c`        |
//! | 8·points^dim     | θ                           |

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use nsfg_core::basis::build_basis;
use nsfg_core::fields::{Grid, ScalarField};
use nsfg_core::state::SystemState;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::sim::{simulate, Outcome, Row, RunError, Termination};

pub const MAGIC: &[u8; 5] = b"NSFG1";
pub const CSV_NAME: &str = "diagnostics.csv";
pub const MANIFEST_NAME: &str = "manifest.json";
pub const CSV_VERSION: u32 = 1;

pub fn write_csv(rows: &[Row], w: impl Write) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<Row>, csv::Error> {
    csv::Reader::from_path(path)?.deserialize().collect()
}

pub fn encode_snapshot(s: &SystemState) -> Vec<u8> {
    let g = s.grid();
    let mut out = Vec::with_capacity(33 + 8 * (2 * g.len() + s.lambda().len()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(g.points() as u32).to_le_bytes());
    out.extend_from_slice(&g.length().to_le_bytes());
    out.extend_from_slice(&(s.basis().n_modes() as u32).to_le_bytes());
    out.extend_from_slice(&s.t.to_le_bytes());
    for v in s.rho.values().iter().chain(s.lambda()).chain(s.theta.values()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("not a snapshot (bad magic)")]
    Magic,
    #[error("snapshot truncated")]
    Truncated,
    #[error("snapshot has {0} trailing bytes")]
    Trailing(usize),
    #[error(transparent)]
    Core(#[from] nsfg_core::Error),
}

struct Cursor<'a>(&'a [u8]);

impl Cursor<'_> {
    fn take<const K: usize>(&mut self) -> Result<[u8; K], SnapshotError> {
        if self.0.len() < K {
            return Err(SnapshotError::Truncated);
        }
        let (head, rest) = self.0.split_at(K);
        self.0 = rest;
        Ok(head.try_into().expect("split length"))
    }
    fn u32(&mut self) -> Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Result<f64, SnapshotError> {
        Ok(f64::from_le_bytes(self.take()?))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, SnapshotError> {
        (0..n).map(|_| self.f64()).collect()
    }
}

/// Decodes a snapshot. Values are taken verbatim, so a dump of a non-finite
/// state decodes only up to validation of the state itself.
pub fn decode_snapshot(bytes: &[u8]) -> Result<SystemState, SnapshotError> {
    let mut c = Cursor(bytes);
    if &c.take::<5>()? != MAGIC {
        return Err(SnapshotError::Magic);
    }
    let (dim, points, length) = (c.u32()? as usize, c.u32()? as usize, c.f64()?);
    let (n, t) = (c.u32()? as usize, c.f64()?);
    let grid = Grid::new(dim, points, length)?;
    let rho = c.f64s(grid.len())?;
    let lambda = c.f64s(n * dim)?;
    let theta = c.f64s(grid.len())?;
    if !c.0.is_empty() {
        return Err(SnapshotError::Trailing(c.0.len()));
    }
    let basis = build_basis(grid, n)?;
    let state =
        SystemState::new(ScalarField::new(grid, rho)?, basis.velocity(lambda)?, ScalarField::new(grid, theta)?, t)?;
    Ok(state)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MvSummary {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub code_version: String,
    pub csv_version: u32,
    pub config: RunConfig,
    pub started: DateTime<Utc>,
    pub finished: Option<DateTime<Utc>>,
    /// `running` until the run is finalized.
    pub status: String,
    pub termination: Option<Termination>,
    pub message: Option<String>,
    pub mv_inequality: Option<MvSummary>,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self, RunError> {
        Ok(serde_json::from_slice(&fs::read(dir.join(MANIFEST_NAME))?)?)
    }

    fn store(&self, dir: &Path) -> Result<(), RunError> {
        let tmp = dir.join(format!("{MANIFEST_NAME}.tmp"));
        fs::write(&tmp, serde_json::to_vec_pretty(self)?)?;
        fs::rename(tmp, dir.join(MANIFEST_NAME))?;
        Ok(())
    }

    /// Names of listed files that are missing or whose hash differs.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|f| hash_file(&dir.join(&f.name)).map_or(true, |(h, _)| h != f.sha256))
            .map(|f| f.name.clone())
            .collect()
    }
}

pub fn hash_file(path: &Path) -> std::io::Result<(String, u64)> {
    let mut buf = vec![];
    fs::File::open(path)?.read_to_end(&mut buf)?;
    Ok((hex::encode(Sha256::digest(&buf)), buf.len() as u64))
}

/// Result of [`run_to_dir`]: the in-memory outcome plus where it was written.
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub outcome: Outcome,
    pub manifest: RunManifest,
}

impl RunArtifacts {
    pub fn succeeded(&self) -> bool {
        self.outcome.failure.is_none()
    }
}

/// Runs `cfg` and writes config echo, CSV, final (or failure) snapshot and
/// manifest into `dir`. The manifest exists from the start with status `running`.
pub fn run_to_dir(cfg: &RunConfig, dir: &Path) -> Result<RunArtifacts, RunError> {
    cfg.validate()?;
    fs::create_dir_all(dir)?;
    let mut manifest = RunManifest {
        code_version: env!("CARGO_PKG_VERSION").into(),
        csv_version: CSV_VERSION,
        config: cfg.clone(),
        started: Utc::now(),
        finished: None,
        status: "running".into(),
        termination: None,
        message: None,
        mv_inequality: None,
        files: vec![],
    };
    manifest.store(dir)?;

    let outcome = simulate(cfg)?;
    let mut names = vec!["config.toml".to_string(), CSV_NAME.to_string()];
    fs::write(dir.join("config.toml"), cfg.to_toml())?;
    write_csv(&outcome.rows, fs::File::create(dir.join(CSV_NAME))?)?;
    match &outcome.failure {
        None => {
            let last = outcome.history.last().expect("history holds the initial state");
            fs::write(dir.join("final.snap"), encode_snapshot(last))?;
            names.push("final.snap".into());
        }
        Some(f) => {
            fs::write(dir.join("failure.snap"), encode_snapshot(&f.state))?;
            names.push("failure.snap".into());
        }
    }

    manifest.files = names
        .into_iter()
        .map(|name| {
            let (sha256, bytes) = hash_file(&dir.join(&name))?;
            Ok(FileEntry { name, bytes, sha256 })
        })
        .collect::<std::io::Result<_>>()?;
    manifest.finished = Some(Utc::now());
    manifest.termination = Some(outcome.termination());
    manifest.status = if outcome.failure.is_none() { "completed" } else { "failed" }.into();
    manifest.message = outcome.failure.as_ref().map(|f| format!("step {} (t = {}): {}", f.step, f.t, f.message));
    manifest.mv_inequality = outcome.mv_check.as_ref().map(|m| MvSummary { lhs: m.lhs, rhs: m.rhs, pass: m.pass });
    manifest.store(dir)?;
    Ok(RunArtifacts { dir: dir.into(), outcome, manifest })
}

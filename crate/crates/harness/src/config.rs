//! Run configuration (TOML). Unknown keys are rejected everywhere so a typo in
//! an override cannot silently change a sweep.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use nsfg_core::momentum::Stepper;
use nsfg_core::params::Params;
use nsfg_core::thermal::HeatLaw;
use nsfg_core::transport::TransportScheme;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub run: RunSpec,
    pub params: ParamSpec,
    pub initial: InitialSpec,
    #[serde(default)]
    pub diagnostics: DiagnosticSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub points: usize,
    #[serde(default = "two_pi")]
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepperKind {
    #[default]
    Rk2,
    Picard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportKind {
    #[default]
    Imex,
    Strang,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    /// Number of scalar Fourier modes per velocity component.
    pub n_modes: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Steps between diagnostic records.
    #[serde(default = "one")]
    pub cadence: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub stepper: StepperKind,
    #[serde(default)]
    pub transport: TransportKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub bi: Option<f64>,
    pub cold: Option<f64>,
    pub cross: Option<f64>,
    pub hyper: Option<f64>,
    pub heat: Option<f64>,
    pub sink: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    pub eps: f64,
    #[serde(default)]
    pub kappa_q: f64,
    #[serde(default)]
    pub r0: f64,
    #[serde(default)]
    pub r1: f64,
    #[serde(default = "two")]
    pub alpha: f64,
    #[serde(default = "unit")]
    pub kappa0: f64,
    /// Conductivity ellipticity constant; defaults to `min(κ₀, 1/κ₀)`.
    #[serde(default)]
    pub c1: Option<f64>,
    /// Required lower bound on the initial density.
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// ρ = 1, u = 0, θ = θ₀.
    Equilibrium,
    /// ρ = 1 + a sin(k x₁).
    DensityBump,
    /// u₁ = a sin(k x_d) (along x₁ itself in 1D).
    Shear,
    /// θ = θ₀ + a·bump centred in the box.
    HotSpot,
    /// ρ = 1 and a uniform velocity a·ê₁: only drag acts.
    DragOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub preset: Preset,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub wavenumber: usize,
    #[serde(default = "unit")]
    pub theta0: f64,
    /// Extra density modes `Σ c_j sin(j x₁ + φ_j)` with seeded phases.
    #[serde(default)]
    pub coefficients: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticSpec {
    #[serde(default = "unit")]
    pub n_cutoff: f64,
    #[serde(default = "default_cutoff")]
    pub m_cutoff: f64,
    #[serde(rename = "K_cutoff", default = "default_cutoff")]
    pub k_cutoff: f64,
    #[serde(default = "half")]
    pub delta: f64,
    #[serde(default = "two")]
    pub c_psi: f64,
}

impl Default for DiagnosticSpec {
    fn default() -> Self {
        Self { n_cutoff: 1.0, m_cutoff: default_cutoff(), k_cutoff: default_cutoff(), delta: 0.5, c_psi: 2.0 }
    }
}

fn two_pi() -> f64 {
    2.0 * PI
}
fn one() -> usize {
    1
}
fn unit() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn half() -> f64 {
    0.5
}
fn default_nu() -> f64 {
    1e-3
}
fn default_amplitude() -> f64 {
    0.2
}
fn default_cutoff() -> f64 {
    100.0
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Collects every violation rather than stopping at the first.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = vec![];
        let g = &self.grid;
        if !(1..=3).contains(&g.dim) {
            errs.push(format!("grid.dim = {} must be 1, 2 or 3", g.dim));
        }
        if g.points < 8 || !g.points.is_multiple_of(2) {
            errs.push(format!("grid.points = {} must be even and >= 8", g.points));
        }
        if !(g.length.is_finite() && g.length > 0.0) {
            errs.push(format!("grid.length = {} must be positive", g.length));
        }
        let r = &self.run;
        if r.n_modes == 0 {
            errs.push("run.n_modes must be >= 1".into());
        }
        if !(r.dt.is_finite() && r.dt > 0.0) {
            errs.push(format!("run.dt = {} must be positive", r.dt));
        }
        if !(r.t_end.is_finite() && r.t_end > 0.0) {
            errs.push(format!("run.t_end = {} must be positive", r.t_end));
        }
        if r.cadence == 0 {
            errs.push("run.cadence must be >= 1".into());
        }
        if let Err(e) = self.core_params().validate() {
            errs.push(e.to_string());
        }
        let p = &self.params;
        if !(p.alpha.is_finite() && p.alpha >= 2.0) {
            errs.push(format!("params.alpha = {} must be >= 2", p.alpha));
        }
        if !(p.nu.is_finite() && p.nu > 0.0) {
            errs.push(format!("params.nu = {} must be positive", p.nu));
        }
        if p.alpha >= 2.0 {
            if let Err(e) = self.heat_law() {
                errs.push(e.to_string());
            }
        }
        let i = &self.initial;
        if !(i.theta0.is_finite() && i.theta0 > 0.0) {
            errs.push(format!("initial.theta0 = {} must be positive", i.theta0));
        }
        if !i.amplitude.is_finite() || i.coefficients.iter().any(|c| !c.is_finite()) {
            errs.push("initial amplitudes must be finite".into());
        }
        let d = &self.diagnostics;
        if !(d.n_cutoff >= 0.0 && d.m_cutoff > 0.0 && d.k_cutoff > 0.0) {
            errs.push("diagnostics cut-offs must be positive (n_cutoff >= 0)".into());
        }
        if !(d.delta > 0.0 && d.delta < 2.0) {
            errs.push(format!("diagnostics.delta = {} must lie in (0, 2)", d.delta));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    pub fn core_params(&self) -> Params {
        let p = &self.params;
        let o = &p.overrides;
        Params {
            eps: p.eps,
            eps_bi: o.bi,
            eps_cold: o.cold,
            eps_cross: o.cross,
            eps_hyper: o.hyper,
            eps_heat: o.heat,
            eps_sink: o.sink,
            kappa_q: p.kappa_q,
            r0: p.r0,
            r1: p.r1,
        }
    }

    pub fn heat_law(&self) -> nsfg_core::Result<HeatLaw> {
        let p = &self.params;
        match p.c1 {
            Some(c1) => HeatLaw::new(p.alpha, nsfg_core::thermal::Kappa0::Constant(p.kappa0), c1),
            None => HeatLaw::constant(p.alpha, p.kappa0),
        }
    }

    pub fn stepper(&self) -> Stepper {
        match self.run.stepper {
            StepperKind::Rk2 => Stepper::Rk2,
            StepperKind::Picard => Stepper::Picard,
        }
    }

    pub fn transport(&self) -> TransportScheme {
        match self.run.transport {
            TransportKind::Imex => TransportScheme::Imex,
            TransportKind::Strang => TransportScheme::Strang,
        }
    }

    /// Number of time steps to reach `t_end`.
    pub fn steps(&self) -> usize {
        (self.run.t_end / self.run.dt - 1e-9).ceil().max(1.0) as usize
    }
}

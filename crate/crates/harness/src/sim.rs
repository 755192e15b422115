//! Initial data, the coupled transport → momentum → thermal step, and the
//! in-memory time loop that produces diagnostic rows.

use std::f64::consts::PI;

use nsfg_core::basis::{build_basis, project};
use nsfg_core::diagnostics::{
    bd_entropy, bd_rate_total, energy, energy_rates, mv_functional, mv_inequality_check, positivity_and_mass,
    time_derivative, EnergyBreakdown, LinearWeight, MvInequalityReport, MvOptions,
};
use nsfg_core::fields::{Grid, ScalarField, VectorField};
use nsfg_core::momentum::{stability_bound, step_velocity, Stepper};
use nsfg_core::rates::tendency;
use nsfg_core::state::{Model, SystemState};
use nsfg_core::thermal::{renormalized_residual, step_temperature_with, HFunction, ThermalInput};
use nsfg_core::transport::{advective_dt_bound, step_density_with, TransportScheme};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, Preset, RunConfig};

/// One CSV row; field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub t: f64,
    pub mass: f64,
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
    #[serde(rename = "E_internal")]
    pub e_internal: f64,
    pub bd_entropy: f64,
    pub mv_n: f64,
    pub min_rho: f64,
    pub min_theta: f64,
    pub res_energy: f64,
    pub res_bd: f64,
    pub res_thermal: f64,
}

pub const COLUMNS: [&str; 15] = [
    "t",
    "mass",
    "E_total",
    "E_kinetic",
    "E_cold",
    "E_capillary",
    "E_hyper",
    "E_internal",
    "bd_entropy",
    "mv_n",
    "min_rho",
    "min_theta",
    "res_energy",
    "res_bd",
    "res_thermal",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Completed,
    StabilityBound,
    NonFinite,
    SolverFailure,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("initial data: {0}")]
    Initial(String),
    #[error("diagnostics failed at t = {t}: {source}")]
    Diagnostics { t: f64, source: nsfg_core::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Why a run stopped early: the failing step and the core error.
#[derive(Debug, Clone)]
pub struct Failure {
    pub step: usize,
    pub t: f64,
    pub reason: Termination,
    pub message: String,
    /// State at the start of the failing step.
    pub state: SystemState,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub rows: Vec<Row>,
    /// States at the recording cadence (plus the last one reached).
    pub history: Vec<SystemState>,
    pub failure: Option<Failure>,
    pub mv_check: Option<MvInequalityReport>,
}

impl Outcome {
    pub fn termination(&self) -> Termination {
        self.failure.as_ref().map_or(Termination::Completed, |f| f.reason)
    }
}

pub fn build_model(cfg: &RunConfig) -> Result<Model, RunError> {
    let g = &cfg.grid;
    let grid = Grid::new(g.dim, g.points, g.length).map_err(|e| RunError::Initial(e.to_string()))?;
    let basis = build_basis(grid, cfg.run.n_modes).map_err(|e| RunError::Initial(e.to_string()))?;
    let law = cfg.heat_law().map_err(|e| RunError::Initial(e.to_string()))?;
    Model::new(basis, cfg.core_params(), law).map_err(|e| RunError::Initial(e.to_string()))
}

pub fn initial_state(cfg: &RunConfig, model: &Model) -> Result<SystemState, RunError> {
    let basis = &model.basis;
    let grid = *basis.grid();
    let init = &cfg.initial;
    let (a, dim) = (init.amplitude, grid.dim());
    let kx = 2.0 * PI / grid.length() * init.wavenumber as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(init.seed);
    let phases: Vec<f64> = init.coefficients.iter().map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
    let base = 2.0 * PI / grid.length();
    let extra = |x: &[f64]| -> f64 {
        init.coefficients
            .iter()
            .zip(&phases)
            .enumerate()
            .map(|(j, (c, p))| c * ((j + 1) as f64 * base * x[0] + p).sin())
            .sum()
    };
    let rho = match init.preset {
        Preset::DensityBump => ScalarField::from_fn(grid, |x| 1.0 + a * (kx * x[0]).sin() + extra(x)),
        _ => ScalarField::from_fn(grid, |x| 1.0 + extra(x)),
    };
    let theta = match init.preset {
        Preset::HotSpot => ScalarField::from_fn(grid, |x| {
            let s: f64 = x.iter().map(|&xi| (base * xi - PI).cos() - 1.0).sum();
            init.theta0 + a * (4.0 * s).exp()
        }),
        _ => ScalarField::constant(grid, init.theta0),
    };
    let velocity = match init.preset {
        Preset::Shear => {
            let mut comps = vec![ScalarField::zeros(grid); dim];
            comps[0] = ScalarField::from_fn(grid, |x| a * (kx * x[dim - 1]).sin());
            let field = VectorField::new(comps).map_err(|e| RunError::Initial(e.to_string()))?;
            let gv = project(&field, basis).map_err(|e| RunError::Initial(e.to_string()))?;
            if a != 0.0 && gv.lambda().iter().all(|&l| l.abs() < 1e-12) {
                return Err(RunError::Initial(format!("shear mode k = {} is not in the basis", init.wavenumber)));
            }
            gv
        }
        Preset::DragOnly => {
            // the constant mode of component 1 is the first basis element
            let mut lambda = vec![0.0; basis.len()];
            lambda[0] = a * grid.volume().sqrt();
            basis.velocity(lambda).map_err(|e| RunError::Initial(e.to_string()))?
        }
        _ => basis.zero_velocity(),
    };
    if rho.min() < cfg.params.nu {
        return Err(RunError::Initial(format!("min ρ₀ = {} below nu = {}", rho.min(), cfg.params.nu)));
    }
    if theta.min() <= 0.0 {
        return Err(RunError::Initial(format!("min θ₀ = {} must be positive", theta.min())));
    }
    SystemState::new(rho, velocity, theta, 0.0).map_err(|e| RunError::Initial(e.to_string()))
}

/// Largest admissible step for the coupled scheme and the term that sets it.
pub fn step_bound(state: &SystemState, model: &Model) -> (f64, String) {
    let (b, term) = stability_bound(state, &model.params);
    let adv = advective_dt_bound(&state.u());
    if adv < b {
        (adv, "advection".into())
    } else {
        (b, term.into())
    }
}

/// One coupled step: transport, then momentum with the new density, then heat.
///
/// The sequential split is made time-centred in its coupling fields: density is
/// transported with `u^{n+½}` and the momentum forces see `θ^{n+½}`, both
/// predicted from the semi-discrete tendency, and the heat step receives the
/// mean of the old and new velocity. Without this the exchange terms between
/// the sub-steps lag by half a step and every balance residual is only O(dt).
pub fn coupled_step(
    state: &SystemState,
    model: &Model,
    dt: f64,
    stepper: Stepper,
    scheme: TransportScheme,
) -> nsfg_core::Result<SystemState> {
    let (bound, term) = step_bound(state, model);
    if dt > bound {
        return Err(nsfg_core::Error::StabilityBound { term, dt, bound });
    }
    let p = &model.params;
    let basis = &model.basis;
    let tnd = tendency(state, model)?;
    let lambda_half: Vec<f64> = state.lambda().iter().zip(&tnd.lambda_dot).map(|(l, d)| l + 0.5 * dt * d).collect();
    let theta_half = state.theta.zip_map(&tnd.theta_t, |t, d| (t + 0.5 * dt * d).max(0.0));

    let rho_new = step_density_with(&state.rho, &basis.combine(&lambda_half), p.eps, dt, scheme)?.rho_new;
    let centred = SystemState { theta: theta_half, ..state.clone() };
    let velocity = step_velocity(&centred, &rho_new, p, dt, stepper)?;
    let mid: Vec<f64> = state.lambda().iter().zip(velocity.lambda()).map(|(a, b)| 0.5 * (a + b)).collect();
    let heat = step_temperature_with(ThermalInput {
        theta: &state.theta,
        rho_old: &state.rho,
        rho_new: &rho_new,
        u: &basis.combine(&mid),
        law: &model.law,
        eps_heat: p.heat(),
        eps_sink: p.sink(),
        dt,
    })?;
    SystemState::new(rho_new, velocity, heat.theta_new, state.t + dt)
}

fn classify(e: &nsfg_core::Error) -> Termination {
    use nsfg_core::Error as E;
    match e {
        E::StabilityBound { .. } => Termination::StabilityBound,
        E::NonFinite(_) | E::NonFiniteTerm(_) => Termination::NonFinite,
        _ => Termination::SolverFailure,
    }
}

/// Functionals of one recorded state, cached so that neighbouring rows can
/// form centred differences without recomputation.
struct Evaluated {
    state: SystemState,
    energy: EnergyBreakdown,
    bd: f64,
    energy_rate: f64,
    bd_rate: f64,
}

fn evaluate(state: SystemState, model: &Model) -> nsfg_core::Result<Evaluated> {
    Ok(Evaluated {
        energy: energy(&state, &model.params)?,
        bd: bd_entropy(&state, &model.params)?,
        energy_rate: energy_rates(&state, model)?.total(),
        bd_rate: bd_rate_total(&state, model)?,
        state,
    })
}

fn make_row(all: &[Evaluated], i: usize, cfg: &RunConfig, model: &Model) -> nsfg_core::Result<Row> {
    let cur = &all[i];
    let times: Vec<f64> = all.iter().map(|e| e.state.t).collect();
    let deriv = |f: &dyn Fn(&Evaluated) -> f64| {
        if all.len() < 2 {
            return 0.0;
        }
        // only the three nearest samples enter, so evaluate just those
        let lo = i.saturating_sub(1).min(all.len().saturating_sub(3));
        let hi = (lo + 3).min(all.len());
        let vals: Vec<f64> = all[lo..hi].iter().map(f).collect();
        time_derivative(&times[lo..hi], &vals, i - lo)
    };
    let res_energy = deriv(&|e| e.energy.total()) - cur.energy_rate;
    let res_bd = deriv(&|e| e.bd) - cur.bd_rate;
    let res_thermal = if all.len() >= 2 {
        let (lo, hi) = if i == 0 { (0, 1) } else { (i - 1, i) };
        renormalized_residual(
            &all[lo].state,
            &all[hi].state,
            &HFunction::inverse_one_plus(),
            &model.law,
            &model.params,
        )?
    } else {
        0.0
    };
    let d = &cfg.diagnostics;
    let (mass, min_rho, min_theta) = positivity_and_mass(&cur.state);
    let e = &cur.energy;
    Ok(Row {
        t: cur.state.t,
        mass,
        e_total: e.total(),
        e_kinetic: e.kinetic,
        e_cold: e.cold,
        e_capillary: e.capillary,
        e_hyper: e.hyper,
        e_internal: e.internal,
        bd_entropy: cur.bd,
        mv_n: mv_functional(&cur.state, d.n_cutoff, d.m_cutoff, d.k_cutoff)?,
        min_rho,
        min_theta,
        res_energy,
        res_bd,
        res_thermal,
    })
}

/// Runs the configured problem without touching the filesystem.
pub fn simulate(cfg: &RunConfig) -> Result<Outcome, RunError> {
    cfg.validate()?;
    let model = build_model(cfg)?;
    let mut state = initial_state(cfg, &model)?;
    let (dt, steps, cadence) = (cfg.run.dt, cfg.steps(), cfg.run.cadence);
    let (stepper, scheme) = (cfg.stepper(), cfg.transport());
    let diag_err = |t: f64| move |source| RunError::Diagnostics { t, source };

    let mut evaluated = vec![evaluate(state.clone(), &model).map_err(diag_err(0.0))?];
    let mut failure = None;
    for step in 0..steps {
        // the final step is shortened to land on t_end
        let h = dt.min(cfg.run.t_end - state.t).max(dt * 1e-9);
        match coupled_step(&state, &model, h, stepper, scheme) {
            Ok(next) => state = next,
            Err(e) => {
                failure = Some(Failure {
                    step,
                    t: state.t,
                    reason: classify(&e),
                    message: e.to_string(),
                    state: state.clone(),
                });
                break;
            }
        }
        if (step + 1) % cadence == 0 || step + 1 == steps {
            let t = state.t;
            evaluated.push(evaluate(state.clone(), &model).map_err(diag_err(t))?);
        }
    }

    let mut rows = Vec::with_capacity(evaluated.len());
    for i in 0..evaluated.len() {
        let t = evaluated[i].state.t;
        rows.push(make_row(&evaluated, i, cfg, &model).map_err(diag_err(t))?);
    }
    let history: Vec<SystemState> = evaluated.into_iter().map(|e| e.state).collect();
    let d = &cfg.diagnostics;
    let mv_check = if history.len() >= 2 && failure.is_none() {
        let opts = MvOptions { n: d.n_cutoff, delta: d.delta, c_psi: d.c_psi };
        Some(mv_inequality_check(&history, &model, LinearWeight { scale: 1.0 }, opts).map_err(diag_err(state.t))?)
    } else {
        None
    };
    Ok(Outcome { rows, history, failure, mv_check })
}

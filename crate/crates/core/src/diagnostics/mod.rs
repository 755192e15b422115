//! Functionals and inequality monitors evaluated on discrete states.

mod bd;
mod energy;
mod jungel;
mod mv;

pub use bd::{
    bd_continuum_terms, bd_entropy, bd_identity_residual, bd_rate_total, bd_rates, bd_residual_series, r7_bound,
};
pub use energy::{
    continuum_dissipation, energy, energy_dissipation_residual, energy_rates, energy_residual_series, potential_rates,
    time_derivative, EnergyBreakdown, EnergyRates,
};
pub use jungel::{jungel_check, JungelReport};
pub use mv::{
    mv_functional, mv_functional_untruncated, mv_inequality_check, LinearWeight, MvInequalityReport, MvOptions,
};

use crate::fields::integrate;
use crate::state::SystemState;

/// Time-stamped diagnostic values.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: EnergyBreakdown,
    pub bd_entropy: f64,
    pub mv_n: f64,
    pub min_rho: f64,
    pub min_theta: f64,
    pub residuals: Vec<(String, f64)>,
}

impl FunctionalRecord {
    pub fn residual(&self, name: &str) -> Option<f64> {
        self.residuals.iter().find(|r| r.0 == name).map(|r| r.1)
    }
}

/// `(∫ρ, min ρ, min θ)`.
pub fn positivity_and_mass(state: &SystemState) -> (f64, f64, f64) {
    (integrate(&state.rho), state.rho.min(), state.theta.min())
}

//! Semi-discrete time derivatives of the full state.

use crate::basis::GalerkinBasis;
use crate::error::Result;
use crate::fields::{ScalarField, VectorField};
use crate::momentum::{assemble_mass, force_fields, ForceFields, MassOperator};
use crate::state::{Model, SystemState};
use crate::thermal::heat_rate;
use crate::transport::density_rate;

#[derive(Debug, Clone)]
pub struct Tendency {
    pub rho_t: ScalarField,
    pub lambda_dot: Vec<f64>,
    /// `d/dt[(ε+ρ)θ]`.
    pub w_t: ScalarField,
    pub theta_t: ScalarField,
}

/// Shared per-state quantities used by several rate computations.
#[derive(Debug, Clone)]
pub struct Frozen {
    pub u: VectorField,
    pub forces: ForceFields,
    pub mass: MassOperator,
    pub rho_t: ScalarField,
}

impl Frozen {
    pub fn new(state: &SystemState, model: &Model) -> Result<Self> {
        let u = state.u();
        let forces = force_fields(&state.rho, &u, &state.theta, &model.params)?;
        let mass = assemble_mass(&state.rho, state.basis())?;
        let rho_t = density_rate(&state.rho, &u, model.params.eps);
        Ok(Self { u, forces, mass, rho_t })
    }

    /// `(Ṁλ)_i = ∫ρ_t u·e_i`.
    pub fn mass_rate_times_lambda(&self, basis: &GalerkinBasis) -> Result<Vec<f64>> {
        basis.inner_products(&self.u.mul_scalar(&self.rho_t))
    }
}

pub fn tendency(state: &SystemState, model: &Model) -> Result<Tendency> {
    let fr = Frozen::new(state, model)?;
    let basis = state.basis();
    let f = fr.forces.project(basis)?.total();
    let mdot = fr.mass_rate_times_lambda(basis)?;
    let rhs: Vec<f64> = f.iter().zip(&mdot).map(|(a, b)| a - b).collect();
    let lambda_dot = fr.mass.solve(&rhs);
    let w_t = heat_rate(&state.theta, &state.rho, &fr.u, &model.law, model.params.sink());
    let eh = model.params.heat();
    let theta_t = (&w_t - &(&fr.rho_t * &state.theta)).zip_map(&state.rho, |a, r| a / (eh + r));
    Ok(Tendency { rho_t: fr.rho_t, lambda_dot, w_t, theta_t })
}

//! Full discrete state `(ρ, λ, θ, t)` and the model it evolves under.

use crate::basis::{reconstruct, GalerkinBasis, GalerkinVelocity};
use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField, VectorField};
use crate::params::Params;
use crate::thermal::HeatLaw;

#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub rho: ScalarField,
    pub velocity: GalerkinVelocity,
    pub theta: ScalarField,
    pub t: f64,
}

impl SystemState {
    pub fn new(rho: ScalarField, velocity: GalerkinVelocity, theta: ScalarField, t: f64) -> Result<Self> {
        if rho.grid() != velocity.basis().grid() || rho.grid() != theta.grid() {
            return Err(Error::GridMismatch);
        }
        if !t.is_finite() {
            return Err(Error::NonFinite("time".into()));
        }
        Ok(Self { rho, velocity, theta, t })
    }

    pub fn grid(&self) -> &Grid {
        self.rho.grid()
    }

    pub fn basis(&self) -> &GalerkinBasis {
        self.velocity.basis()
    }

    pub fn lambda(&self) -> &[f64] {
        self.velocity.lambda()
    }

    /// Velocity field `u_N = Σ λ_i e_i`.
    pub fn u(&self) -> VectorField {
        reconstruct(&self.velocity)
    }

    pub fn with_lambda(&self, lambda: Vec<f64>) -> Result<Self> {
        Ok(Self { velocity: self.basis().velocity(lambda)?, ..self.clone() })
    }
}

#[derive(Debug, Clone)]
pub struct Model {
    pub basis: GalerkinBasis,
    pub params: Params,
    pub law: HeatLaw,
}

impl Model {
    pub fn new(basis: GalerkinBasis, params: Params, law: HeatLaw) -> Result<Self> {
        params.validate()?;
        Ok(Self { basis, params, law })
    }
}

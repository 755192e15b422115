//! Regularized continuity equation `ρ_t + div(ρu) = εΔρ`.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{dealias, divergence, integrate, ScalarField, VectorField};

/// Smallest density accepted by the stepper.
pub const DENSITY_FLOOR: f64 = 1e-10;

/// Relative slack of the exponential envelope check.
pub const ENVELOPE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransportScheme {
    /// Heun advection followed by backward-Euler diffusion.
    #[default]
    Imex,
    /// Half-step Crank-Nicolson diffusion around Heun advection.
    Strang,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityStepReport {
    pub rho_new: ScalarField,
    /// `(∫ρ_new − ∫ρ)/∫ρ`.
    pub mass_drift: f64,
    pub min_rho: f64,
    pub max_rho: f64,
    /// Both exponential envelopes hold.
    pub bound_check: bool,
    pub dt_bound: f64,
}

/// Advective CFL bound `0.5 h / ‖u‖_∞`.
pub fn advective_dt_bound(u: &VectorField) -> f64 {
    let umax = u.max_abs();
    if umax == 0.0 {
        f64::INFINITY
    } else {
        0.5 * u.grid().spacing() / umax
    }
}

/// `−div(P[ρu])` with the 2/3-rule filter on the flux.
pub fn advection_rate(rho: &ScalarField, u: &VectorField) -> ScalarField {
    let flux = u.map_components(|c| dealias(&(rho * c)));
    divergence(&flux).scale(-1.0)
}

/// Full semi-discrete right-hand side `−div(P[ρu]) + εΔρ`.
pub fn density_rate(rho: &ScalarField, u: &VectorField, eps: f64) -> ScalarField {
    let adv = advection_rate(rho, u);
    if eps == 0.0 {
        return adv;
    }
    &adv + &crate::fields::laplacian(rho).scale(eps)
}

pub fn check_density(rho: &ScalarField) -> Result<()> {
    if !rho.is_finite() {
        return Err(Error::NonFinite("density".into()));
    }
    let min = rho.min();
    if min <= 0.0 {
        return Err(Error::NonpositiveDensity { min });
    }
    if min < DENSITY_FLOOR {
        return Err(Error::DensityFloor { min, floor: DENSITY_FLOOR });
    }
    Ok(())
}

fn diffuse(rho: &ScalarField, eps_dt: f64, crank_nicolson: bool) -> ScalarField {
    if eps_dt == 0.0 {
        return rho.clone();
    }
    let g = *rho.grid();
    rho.spectrum()
        .apply(|m, _| {
            let k2: f64 = m.iter().map(|&mi| g.wavenumber(mi).powi(2)).sum();
            let f = if crank_nicolson {
                (1.0 - 0.5 * eps_dt * k2) / (1.0 + 0.5 * eps_dt * k2)
            } else {
                1.0 / (1.0 + eps_dt * k2)
            };
            Complex64::new(f, 0.0)
        })
        .to_field()
}

fn advect(rho: &ScalarField, u: &VectorField, dt: f64) -> ScalarField {
    let a0 = advection_rate(rho, u);
    let pred = rho + &a0.scale(dt);
    let a1 = advection_rate(&pred, u);
    rho.zip_map(&(&a0 + &a1), |r, a| r + 0.5 * dt * a)
}

pub fn step_density(rho: &ScalarField, u: &VectorField, eps: f64, dt: f64) -> Result<DensityStepReport> {
    step_density_with(rho, u, eps, dt, TransportScheme::Imex)
}

pub fn step_density_with(
    rho: &ScalarField,
    u: &VectorField,
    eps: f64,
    dt: f64,
    scheme: TransportScheme,
) -> Result<DensityStepReport> {
    check_density(rho)?;
    if rho.grid() != u.grid() {
        return Err(Error::GridMismatch);
    }
    if !u.is_finite() {
        return Err(Error::NonFinite("velocity".into()));
    }
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt = {dt}")));
    }
    let dt_bound = advective_dt_bound(u);
    if dt > dt_bound {
        return Err(Error::StabilityBound { term: "advection".into(), dt, bound: dt_bound });
    }

    let rho_new = match scheme {
        TransportScheme::Imex => diffuse(&advect(rho, u, dt), eps * dt, false),
        TransportScheme::Strang => {
            let half = diffuse(rho, eps * dt * 0.5, true);
            diffuse(&advect(&half, u, dt), eps * dt * 0.5, true)
        }
    };
    if !rho_new.is_finite() {
        return Err(Error::NonFinite("density after transport".into()));
    }

    let m0 = integrate(rho);
    let mass_drift = (integrate(&rho_new) - m0) / m0;
    let div_inf = divergence(u).max_abs();
    let (min0, max0) = (rho.min(), rho.max());
    let (min_rho, max_rho) = (rho_new.min(), rho_new.max());
    let lower = min0 * (-dt * div_inf).exp() * (1.0 - ENVELOPE_TOL);
    let upper = max0 * (dt * div_inf).exp() * (1.0 + ENVELOPE_TOL);
    let bound_check = min_rho > 0.0 && min_rho >= lower && max_rho <= upper;
    Ok(DensityStepReport { rho_new, mass_drift, min_rho, max_rho, bound_check, dt_bound })
}

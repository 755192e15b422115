//! BD entropy in the effective velocity `u + ∇log ρ`.
//!
//! On the Galerkin level `∇log ρ` is not a test function, so the rate is
//! derived with `ψ* = Σ(M⁻¹g)_i e_i`, `g_i = ⟨e_i, ∇ρ⟩`: the velocity
//! coefficient pairing with `∇ρ` evolves through `M⁻¹`. This makes the rate
//! below the exact time derivative of [`bd_entropy`] along the semi-discrete flow.

use super::energy::{bohm_ratio, check_history, finite_difference};
use crate::error::{Error, Result};
use crate::fields::{divergence, gradient, integrate, laplacian, laplacian_power, ScalarField};
use crate::params::Params;
use crate::rates::Frozen;
use crate::state::{Model, SystemState};

pub fn bd_entropy(state: &SystemState, params: &Params) -> Result<f64> {
    crate::transport::check_density(&state.rho)?;
    let rho = &state.rho;
    let u = state.u();
    let inv = rho.map(|r| 1.0 / r);
    let w = &u + &gradient(rho).mul_scalar(&inv);
    let kinetic = 0.5 * integrate(&(rho * &w.norm_sq()));
    let e = super::energy(state, params)?;
    let log_term = if params.r0 > 0.0 { params.r0 * integrate(&rho.map(f64::ln)) } else { 0.0 };
    Ok(kinetic + e.cold + e.capillary + e.hyper - log_term)
}

/// Exact rate of [`bd_entropy`], grouped by source term.
pub fn bd_rates(state: &SystemState, model: &Model) -> Result<Vec<(&'static str, f64)>> {
    let p = &model.params;
    let fr = Frozen::new(state, model)?;
    let basis = state.basis();
    let rho = &state.rho;
    let u = &fr.u;
    let rho_t = &fr.rho_t;
    let grad_rho = gradient(rho);
    let g = basis.inner_products(&grad_rho)?;
    let psi = basis.combine(&fr.mass.solve(&g));
    let w = u + &psi;
    let f = fr.forces.pair(&w);
    let force = |name: &str| f.iter().find(|x| x.0 == name).map_or(0.0, |x| x.1);

    let inv = rho.map(|r| 1.0 / r);
    let d_y = integrate(&(&grad_rho.dot(&gradient(rho_t)) * &inv))
        - 0.5 * integrate(&(&(&grad_rho.norm_sq() * rho_t) * &inv.map(|v| v * v)));
    let transport = force("convection") - 0.5 * integrate(&(rho_t * &u.norm_sq())) - integrate(&(rho_t * &u.dot(&psi)))
        + integrate(&u.dot(&gradient(rho_t)))
        + d_y;

    let mut out = vec![
        ("transport", transport),
        ("viscous", force("viscous")),
        ("pressure", force("pressure")),
        ("biharmonic", force("biharmonic")),
        ("cross", force("cross")),
        ("drag1", force("drag1")),
    ];
    let log_rate = if p.r0 > 0.0 { p.r0 * integrate(&(rho_t * &inv)) } else { 0.0 };
    out.push(("drag0", force("drag0") - log_rate));
    let cold = if p.cold() > 0.0 { p.cold() * integrate(&(&rho.map(|r| r.powi(-11)) * rho_t)) } else { 0.0 };
    out.push(("cold", force("cold") - cold));
    let cap = if p.kappa_q > 0.0 { 0.5 * p.kappa_q * integrate(&(&bohm_ratio(rho).1 * rho_t)) } else { 0.0 };
    out.push(("capillary", force("capillary") - cap));
    let hyp = if p.hyper() > 0.0 { p.hyper() * integrate(&(&laplacian_power(rho, 9)? * rho_t)) } else { 0.0 };
    out.push(("hyper", force("hyper") - hyp));
    Ok(out)
}

pub fn bd_rate_total(state: &SystemState, model: &Model) -> Result<f64> {
    Ok(bd_rates(state, model)?.iter().map(|x| x.1).sum())
}

/// Signed `d/dt BD|_FD − rate` at every state.
pub fn bd_residual_series(states: &[SystemState], model: &Model) -> Result<Vec<f64>> {
    check_history(states)?;
    let v: Vec<f64> = states.iter().map(|s| bd_entropy(s, &model.params)).collect::<Result<_>>()?;
    (0..states.len()).map(|i| Ok(finite_difference(states, &v, i) - bd_rate_total(&states[i], model)?)).collect()
}

/// Largest magnitude of [`bd_residual_series`]; requires `ε > 0`.
pub fn bd_identity_residual(states: &[SystemState], model: &Model) -> Result<f64> {
    if model.params.eps <= 0.0 {
        return Err(Error::InvalidParameter("BD identity needs eps > 0".into()));
    }
    Ok(bd_residual_series(states, model)?.into_iter().fold(0.0, |a, r| a.max(r.abs())))
}

/// The eight right-hand integrals `R₁…R₈` of the continuum BD identity.
pub fn bd_continuum_terms(state: &SystemState, params: &Params) -> Result<[(&'static str, f64); 8]> {
    crate::transport::check_density(&state.rho)?;
    let eps = params.eps;
    let (rho, theta) = (&state.rho, &state.theta);
    let u = state.u();
    let grad_rho = gradient(rho);
    let log_rho = rho.map(f64::ln);
    let grad_log = gradient(&log_rho);
    let ju = crate::fields::jacobian(&u);
    let dim = rho.grid().dim();
    // ∇ρ·∇u·∇log ρ = Σ_ij ∂_iρ ∂_i u_j ∂_j log ρ
    let mut r1 = ScalarField::zeros(*rho.grid());
    for i in 0..dim {
        for j in 0..dim {
            r1 = &r1 + &(&(grad_rho.component(i) * ju.get(j, i)) * grad_log.component(j));
        }
    }
    let lap_rho = laplacian(rho);
    let inv = rho.map(|r| 1.0 / r);
    let r2 = &(&lap_rho * &grad_log.norm_sq()) * &inv;
    let r3 = &(&divergence(&u.mul_scalar(rho)) * &lap_rho) * &inv;
    let grad_lap_log = gradient(&laplacian(&log_rho));
    let lap_u = u.map_components(laplacian);
    let r5 = &u.dot(&grad_rho) * &inv;
    let r6 = &u.norm_sq() * &u.dot(&grad_rho);
    let r7 = &(rho * theta) * &divergence(&u);
    let r8 = gradient(theta).dot(&grad_rho);
    Ok([
        ("R1", eps * integrate(&r1)),
        ("R2", eps * integrate(&r2)),
        ("R3", -eps * integrate(&r3)),
        ("R4", -eps * integrate(&lap_u.dot(&grad_lap_log))),
        ("R5", -params.r0 * integrate(&r5)),
        ("R6", -params.r1 * integrate(&r6)),
        ("R7", -integrate(&r7)),
        ("R8", -integrate(&r8)),
    ])
}

/// `(|R₇|, ε∫ρ|div u|² + (1/4ε)∫ρθ²)`.
pub fn r7_bound(state: &SystemState, params: &Params) -> Result<(f64, f64)> {
    if params.eps <= 0.0 {
        return Err(Error::InvalidParameter("R7 bound needs eps > 0".into()));
    }
    let terms = bd_continuum_terms(state, params)?;
    let (rho, theta) = (&state.rho, &state.theta);
    let div = divergence(&state.u());
    let bound = params.eps * integrate(&(rho * &div.map(|v| v * v)))
        + integrate(&(rho * &theta.map(|t| t * t))) / (4.0 * params.eps);
    Ok((terms[6].1.abs(), bound))
}

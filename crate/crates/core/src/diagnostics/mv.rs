//! Truncated log-energy functional `∫ρφ̃_n(|v|²)` and the time-integrated
//! inequality bounding it along a run.

use crate::cutoffs::{phi_tilde_n, phi_tilde_n_prime, truncated_velocity};
use crate::error::{Error, Result};
use crate::fields::{gradient, integrate, ScalarField, VectorField};
use crate::state::{Model, SystemState};

fn weighted_phi(rho: &ScalarField, v: &VectorField, n: f64) -> Result<f64> {
    let y = v.norm_sq();
    let phi = y.values().iter().map(|&y| phi_tilde_n(y, n)).collect::<Result<Vec<f64>>>()?;
    let phi = ScalarField::new(*rho.grid(), phi)?;
    Ok(integrate(&(rho * &phi)))
}

/// `∫ρφ̃_n(|v|²)` with `v = φ_m(ρ)φ_K(ρ)u`.
pub fn mv_functional(state: &SystemState, n: f64, m: f64, k: f64) -> Result<f64> {
    let v = truncated_velocity(&state.rho, &state.u(), m, k)?;
    weighted_phi(&state.rho, &v, n)
}

/// `∫ρφ̃_n(|u|²)`.
pub fn mv_functional_untruncated(state: &SystemState, n: f64) -> Result<f64> {
    weighted_phi(&state.rho, &state.u(), n)
}

/// Test weight `ψ(t) = s·(1 − (t−t₀)/T)₊` over the run window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearWeight {
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvInequalityReport {
    pub lhs: f64,
    /// Terms proportional to `ψ` (`‖ψ‖_∞` or `ψ(0)`).
    pub rhs_linear: f64,
    /// `2E₀`.
    pub rhs_constant: f64,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvOptions {
    pub n: f64,
    /// Hölder split exponent in `(0, 2)`.
    pub delta: f64,
    /// Constant in front of the temperature term.
    pub c_psi: f64,
}

impl Default for MvOptions {
    fn default() -> Self {
        Self { n: 1.0, delta: 0.5, c_psi: 2.0 }
    }
}

fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    t.windows(2).zip(f.windows(2)).map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0] + f[1])).sum()
}

/// `−∫ψ'∫ρφ_n(u) ≤ 8‖ψ‖(∫ρ₀|u₀|² + |∇√ρ₀|² − r₀ log₋ρ₀) + 2E₀ + ψ(0)∫ρ₀φ_n(u₀)
///   + c‖ψ‖∫(∫(ρθ²)^{2/(2−δ)})^{(2−δ)/2}(∫(1+φ̃'_n(|u|²))^{2/δ})^{δ/2}`.
pub fn mv_inequality_check(
    history: &[SystemState],
    model: &Model,
    psi: LinearWeight,
    opts: MvOptions,
) -> Result<MvInequalityReport> {
    if history.len() < 2 {
        return Err(Error::InsufficientHistory { needed: 2, got: history.len() });
    }
    if !(psi.scale.is_finite() && psi.scale >= 0.0) {
        return Err(Error::InvalidWeight(format!("scale {} must be >= 0", psi.scale)));
    }
    if !(opts.delta > 0.0 && opts.delta < 2.0) {
        return Err(Error::InvalidParameter(format!("delta = {} outside (0, 2)", opts.delta)));
    }
    let t0 = history[0].t;
    let span = history[history.len() - 1].t - t0;
    if !(span > 0.0) {
        return Err(Error::InvalidWeight("empty time window".into()));
    }
    let s = psi.scale;
    let times: Vec<f64> = history.iter().map(|h| h.t).collect();
    let mv: Vec<f64> = history.iter().map(|h| mv_functional_untruncated(h, opts.n)).collect::<Result<_>>()?;
    let lhs = s / span * trapezoid(&times, &mv);

    let first = &history[0];
    let (rho0, u0) = (&first.rho, first.u());
    let r0 = model.params.r0;
    let sqrt_grad = gradient(&rho0.map(f64::sqrt)).norm_sq();
    let log_minus = rho0.map(|r| r.ln().min(0.0));
    let initial = integrate(&(rho0 * &u0.norm_sq())) + integrate(&sqrt_grad) - r0 * integrate(&log_minus);
    let e0 = super::energy(first, &model.params)?.total();

    let (a, b) = (2.0 / (2.0 - opts.delta), 2.0 / opts.delta);
    let thermal: Vec<f64> = history
        .iter()
        .map(|h| {
            let rt = (&h.rho * &h.theta.map(|t| t * t)).map(|v| v.powf(a));
            let y = h.u().norm_sq();
            let d = y
                .values()
                .iter()
                .map(|&y| phi_tilde_n_prime(y, opts.n).map(|p| (1.0 + p).powf(b)))
                .collect::<Result<Vec<_>>>()?;
            let d = ScalarField::new(*h.grid(), d)?;
            Ok(integrate(&rt).powf(1.0 / a) * integrate(&d).powf(1.0 / b))
        })
        .collect::<Result<_>>()?;
    let rhs_linear = 8.0 * s * initial + s * mv[0] + opts.c_psi * s * trapezoid(&times, &thermal);
    let rhs_constant = 2.0 * e0;
    let rhs = rhs_linear + rhs_constant;
    Ok(MvInequalityReport { lhs, rhs_linear, rhs_constant, rhs, pass: lhs <= rhs * (1.0 + 1e-6) })
}

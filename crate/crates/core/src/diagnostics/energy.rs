//! Total energy, its exact semi-discrete rate split into dissipation and
//! exchange terms, and the finite-difference balance residual.

use crate::error::{Error, Result};
use crate::fields::{divergence, gradient, integrate, jacobian, laplacian, laplacian_power, strain, ScalarField};
use crate::params::Params;
use crate::rates::Frozen;
use crate::state::{Model, SystemState};
use crate::transport::advection_rate;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    /// `½∫ρ|u|²`.
    pub kinetic: f64,
    /// `(ε/10)∫ρ⁻¹⁰`.
    pub cold: f64,
    /// `(κ/2)∫|∇√ρ|²`.
    pub capillary: f64,
    /// `(ε/2)∫|∇Δ⁴ρ|²`.
    pub hyper: f64,
    /// `∫(ε+ρ)θ`.
    pub internal: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.kinetic + self.cold + self.capillary + self.hyper + self.internal
    }
}

/// `Δs/s` with `s = √ρ`.
pub(crate) fn bohm_ratio(rho: &ScalarField) -> (ScalarField, ScalarField) {
    let s = rho.map(f64::sqrt);
    let lap_s = laplacian(&s);
    let ratio = lap_s.zip_map(&s, |a, b| a / b);
    (s, ratio)
}

pub fn energy(state: &SystemState, params: &Params) -> Result<EnergyBreakdown> {
    let rho = &state.rho;
    if rho.min() <= 0.0 {
        return Err(Error::NonpositiveDensity { min: rho.min() });
    }
    let u = state.u();
    let kinetic = 0.5 * integrate(&(rho * &u.norm_sq()));
    let cold = if params.cold() > 0.0 { params.cold() / 10.0 * integrate(&rho.map(|r| r.powi(-10))) } else { 0.0 };
    // by-parts forms keep the discrete rates exact
    let capillary = if params.kappa_q > 0.0 {
        let s = rho.map(f64::sqrt);
        -0.5 * params.kappa_q * integrate(&(&s * &laplacian(&s)))
    } else {
        0.0
    };
    let hyper = if params.hyper() > 0.0 {
        let d4 = laplacian_power(rho, 4)?;
        let d5 = laplacian_power(rho, 5)?;
        -0.5 * params.hyper() * integrate(&(&d4 * &d5))
    } else {
        0.0
    };
    let internal = integrate(&(&rho.map(|r| params.heat() + r) * &state.theta));
    Ok(EnergyBreakdown { kinetic, cold, capillary, hyper, internal })
}

/// Rate of the density-only energies `E_cold + E_cap + E_hyper` along `ρ_t`.
pub fn potential_rates(rho: &ScalarField, rho_t: &ScalarField, params: &Params) -> Result<f64> {
    let mut acc = 0.0;
    if params.cold() > 0.0 {
        acc -= params.cold() * integrate(&(&rho.map(|r| r.powi(-11)) * rho_t));
    }
    if params.kappa_q > 0.0 {
        acc -= 0.5 * params.kappa_q * integrate(&(&bohm_ratio(rho).1 * rho_t));
    }
    if params.hyper() > 0.0 {
        acc -= params.hyper() * integrate(&(&laplacian_power(rho, 9)? * rho_t));
    }
    Ok(acc)
}

/// `dE/dt = Σ exchange − Σ dissipation`, each entry named.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyRates {
    pub dissipation: Vec<(&'static str, f64)>,
    pub exchange: Vec<(&'static str, f64)>,
}

impl EnergyRates {
    pub fn total(&self) -> f64 {
        self.exchange.iter().map(|p| p.1).sum::<f64>() - self.dissipation.iter().map(|p| p.1).sum::<f64>()
    }

    pub fn dissipation(&self, name: &str) -> f64 {
        self.dissipation.iter().find(|p| p.0 == name).map_or(0.0, |p| p.1)
    }

    pub fn exchange(&self, name: &str) -> f64 {
        self.exchange.iter().find(|p| p.0 == name).map_or(0.0, |p| p.1)
    }
}

pub fn energy_rates(state: &SystemState, model: &Model) -> Result<EnergyRates> {
    let p = &model.params;
    let fr = Frozen::new(state, model)?;
    let (rho, theta, u) = (&state.rho, &state.theta, &fr.u);
    let f = fr.forces.pair(u);
    let force = |name: &str| f.iter().find(|x| x.0 == name).map_or(0.0, |x| x.1);
    let adv = advection_rate(rho, u);
    let lap_rho = laplacian(rho);

    let mut dissipation = vec![
        ("biharmonic", -force("biharmonic")),
        ("drag0", -force("drag0")),
        ("drag1", -force("drag1")),
        ("sink", p.sink() * integrate(&theta.map(|t| t.max(0.0).powf(model.law.alpha() + 1.0)))),
    ];
    let mut exchange = vec![];

    let heating = integrate(&(&strain(u).contract(&jacobian(u)).scale(2.0) * rho));
    exchange.push(("viscous", force("viscous") + heating));
    exchange.push(("pressure", force("pressure") - integrate(&(&(rho * theta) * &divergence(u)))));
    exchange.push(("transport", force("convection") + force("cross") - 0.5 * integrate(&(&fr.rho_t * &u.norm_sq()))));

    if p.cold() > 0.0 {
        let w = rho.map(|r| r.powi(-11));
        dissipation.push(("cold", p.eps * p.cold() * integrate(&(&w * &lap_rho))));
        exchange.push(("cold", force("cold") - p.cold() * integrate(&(&w * &adv))));
    }
    if p.kappa_q > 0.0 {
        let q = bohm_ratio(rho).1;
        dissipation.push(("capillary", 0.5 * p.kappa_q * p.eps * integrate(&(&q * &lap_rho))));
        exchange.push(("capillary", force("capillary") - 0.5 * p.kappa_q * integrate(&(&q * &adv))));
    }
    if p.hyper() > 0.0 {
        let d5 = laplacian_power(rho, 5)?;
        let d9 = laplacian_power(rho, 9)?;
        dissipation.push(("hyper", p.eps * p.hyper() * integrate(&(&d5 * &d5))));
        exchange.push(("hyper", force("hyper") - p.hyper() * integrate(&(&d9 * &adv))));
    }
    Ok(EnergyRates { dissipation, exchange })
}

/// Continuum forms of the dissipation integrals, for comparison with [`energy_rates`].
pub fn continuum_dissipation(state: &SystemState, model: &Model) -> Result<Vec<(&'static str, f64)>> {
    let p = &model.params;
    let rho = &state.rho;
    let u = state.u();
    let lap_u: f64 = u.components().iter().map(|c| integrate(&laplacian(c).map(|v| v * v))).sum();
    let d5 = laplacian_power(rho, 5)?;
    let grad_m5 = gradient(&rho.map(|r| r.powi(-5))).norm_sq();
    let log_rho = rho.map(f64::ln);
    let hess = crate::fields::hessian(&log_rho).norm_sq();
    Ok(vec![
        ("biharmonic", p.bi() * lap_u),
        ("hyper", p.eps * p.hyper() * integrate(&(&d5 * &d5))),
        ("cold", p.eps * p.cold() * 11.0 / 25.0 * integrate(&grad_m5)),
        ("drag0", p.r0 * integrate(&u.norm_sq())),
        ("drag1", p.r1 * integrate(&(rho * &u.norm_sq().map(|v| v * v)))),
        ("capillary", 0.25 * p.kappa_q * p.eps * integrate(&(rho * &hess))),
        ("sink", p.sink() * integrate(&state.theta.map(|t| t.powf(model.law.alpha() + 1.0)))),
    ])
}

/// Derivative of `f` at `states[i]`; see [`time_derivative`].
pub(crate) fn finite_difference(states: &[SystemState], values: &[f64], i: usize) -> f64 {
    let times: Vec<f64> = states.iter().map(|s| s.t).collect();
    time_derivative(&times, values, i)
}

/// Second-order derivative of sampled values at `times[i]`: the slope of the
/// quadratic through the three nearest samples (centred inside, one-sided at
/// the ends; non-uniform spacing allowed). Two samples give the secant.
pub fn time_derivative(times: &[f64], values: &[f64], i: usize) -> f64 {
    let n = times.len();
    if n == 2 {
        return (values[1] - values[0]) / (times[1] - times[0]);
    }
    let lo = i.saturating_sub(1).min(n - 3);
    let t = &times[lo..lo + 3];
    let f = &values[lo..lo + 3];
    let x = times[i];
    (0..3)
        .map(|j| {
            let others: Vec<usize> = (0..3).filter(|&k| k != j).collect();
            let denom: f64 = others.iter().map(|&k| t[j] - t[k]).product();
            let (a, b) = (others[0], others[1]);
            f[j] * ((x - t[a]) + (x - t[b])) / denom
        })
        .sum()
}

pub(crate) fn check_history(states: &[SystemState]) -> Result<()> {
    if states.len() < 2 {
        return Err(Error::InsufficientHistory { needed: 2, got: states.len() });
    }
    for w in states.windows(2) {
        if !(w[1].t > w[0].t) {
            return Err(Error::InvalidParameter(format!("times not increasing: {} -> {}", w[0].t, w[1].t)));
        }
        if w[1].basis() != w[0].basis() {
            return Err(Error::GridMismatch);
        }
    }
    Ok(())
}

/// Signed residual `dE/dt|_FD + Σ dissipation − Σ exchange` at every state.
pub fn energy_residual_series(states: &[SystemState], model: &Model) -> Result<Vec<f64>> {
    check_history(states)?;
    let e: Vec<f64> = states.iter().map(|s| energy(s, &model.params).map(|b| b.total())).collect::<Result<_>>()?;
    (0..states.len()).map(|i| Ok(finite_difference(states, &e, i) - energy_rates(&states[i], model)?.total())).collect()
}

/// Largest magnitude of [`energy_residual_series`].
pub fn energy_dissipation_residual(states: &[SystemState], model: &Model) -> Result<f64> {
    Ok(energy_residual_series(states, model)?.into_iter().fold(0.0, |a, r| a.max(r.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_derivative_exact_on_quadratics() {
        let t = [0.0, 0.1, 0.25, 0.3];
        let f: Vec<f64> = t.iter().map(|x| 1.0 + 2.0 * x - 3.0 * x * x).collect();
        for i in 0..t.len() {
            assert!((time_derivative(&t, &f, i) - (2.0 - 6.0 * t[i])).abs() < 1e-12);
        }
        assert_eq!(time_derivative(&[0.0, 0.5], &[1.0, 2.0], 1), 2.0);
    }
}

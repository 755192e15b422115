//! Thermal energy equation
//! `∂t((ε+ρ)θ) + div(ρθu) − Δ𝒦(θ) + εθ^{α+1} = 𝕊:∇u − ρθ div u`
//! and the renormalization primitives `Q_h`, `𝒦`, `𝒦_h`.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{dealias, divergence, gradient, integrate, jacobian, laplacian, strain, ScalarField, VectorField};
use crate::params::Params;
use crate::state::SystemState;

pub const PICARD_TOL: f64 = 1e-10;
pub const PICARD_MAX: usize = 50;
pub const QUAD_TOL: f64 = 1e-10;

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[derive(Clone)]
pub enum Kappa0 {
    Constant(f64),
    /// `κ₀(ρ, θ)`.
    Variable(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Kappa0 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kappa0::Constant(c) => write!(f, "Constant({c})"),
            Kappa0::Variable(_) => write!(f, "Variable(..)"),
        }
    }
}

/// Conductivity `κ(ρ,θ) = κ₀(ρ,θ)(1+θ^α)`.
#[derive(Debug, Clone)]
pub struct HeatLaw {
    alpha: f64,
    kappa0: Kappa0,
    c1: f64,
}

impl HeatLaw {
    pub fn new(alpha: f64, kappa0: Kappa0, c1: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 2.0) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} must be >= 2")));
        }
        if !(c1 > 0.0 && c1 <= 1.0) {
            return Err(Error::InvalidParameter(format!("c1 = {c1} must lie in (0, 1]")));
        }
        if let Kappa0::Constant(k) = kappa0 {
            if !(k >= c1 * (1.0 - 1e-12) && k * c1 <= 1.0 + 1e-12) {
                return Err(Error::InvalidParameter(format!("kappa0 = {k} outside [{c1}, {}]", 1.0 / c1)));
            }
        }
        Ok(Self { alpha, kappa0, c1 })
    }

    pub fn constant(alpha: f64, kappa0: f64) -> Result<Self> {
        Self::new(alpha, Kappa0::Constant(kappa0), kappa0.min(1.0 / kappa0).min(1.0))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn kappa0(&self, rho: f64, theta: f64) -> f64 {
        match &self.kappa0 {
            Kappa0::Constant(k) => *k,
            Kappa0::Variable(f) => f(rho, theta).clamp(self.c1, 1.0 / self.c1),
        }
    }

    pub fn kappa(&self, rho: f64, theta: f64) -> f64 {
        self.kappa0(rho, theta) * (1.0 + theta.max(0.0).powf(self.alpha))
    }

    /// `𝒦(θ) = ∫₀^θ κ(ρ, z) dz`.
    pub fn primitive(&self, rho: f64, theta: f64) -> f64 {
        match self.kappa0 {
            Kappa0::Constant(k) => k * (theta + theta.powf(self.alpha + 1.0) / (self.alpha + 1.0)),
            Kappa0::Variable(_) => adaptive_simpson(&|z| self.kappa(rho, z), 0.0, theta, QUAD_TOL),
        }
    }

    /// Inverse of `θ ↦ 𝒦(θ)` by safeguarded Newton.
    pub fn primitive_inverse(&self, rho: f64, k: f64) -> Result<f64> {
        if k < 0.0 {
            return Err(Error::NegativeArgument(k));
        }
        if k == 0.0 {
            return Ok(0.0);
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        while self.primitive(rho, hi) < k {
            hi *= 2.0;
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let f = self.primitive(rho, x) - k;
            if f.abs() <= 1e-14 * k {
                break;
            }
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let newton = x - f / self.kappa(rho, x);
            x = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (hi - lo) <= 1e-15 * hi {
                break;
            }
        }
        Ok(x)
    }
}

fn check_temperature(theta: &ScalarField) -> Result<()> {
    if !theta.is_finite() {
        return Err(Error::NonFinite("temperature".into()));
    }
    let min = theta.min();
    if min < 0.0 {
        return Err(Error::NegativeTemperature { min });
    }
    Ok(())
}

pub fn k_of(theta: &ScalarField, law: &HeatLaw) -> Result<ScalarField> {
    check_temperature(theta)?;
    Ok(theta.map(|t| law.primitive(1.0, t)))
}

/// `𝒦(θ)` with a density-dependent `κ₀`.
pub fn k_of_with_density(theta: &ScalarField, rho: &ScalarField, law: &HeatLaw) -> Result<ScalarField> {
    check_temperature(theta)?;
    Ok(theta.zip_map(rho, |t, r| law.primitive(r, t)))
}

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Renormalizing weight `h` with its first two derivatives.
#[derive(Clone)]
pub struct HFunction {
    pub label: String,
    h: Scalar,
    h_prime: Scalar,
    h_double_prime: Scalar,
    primitive: Option<Scalar>,
}

impl fmt::Debug for HFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HFunction({})", self.label)
    }
}

impl HFunction {
    pub fn new(
        label: impl Into<String>,
        h: impl Fn(f64) -> f64 + Send + Sync + 'static,
        h_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        h_double_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            h: Arc::new(h),
            h_prime: Arc::new(h_prime),
            h_double_prime: Arc::new(h_double_prime),
            primitive: None,
        }
    }

    fn with_primitive(mut self, q: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.primitive = Some(Arc::new(q));
        self
    }

    /// `h(z) = 1/(1+z)`.
    pub fn inverse_one_plus() -> Self {
        Self::new("1/(1+z)", |z| 1.0 / (1.0 + z), |z| -1.0 / (1.0 + z).powi(2), |z| 2.0 / (1.0 + z).powi(3))
            .with_primitive(|t| t.ln_1p())
    }

    /// `h(z) = (1+z)^{−ω}`; `ω = 0` is the constant 1.
    pub fn power(omega: f64) -> Self {
        let h = Self::new(
            format!("(1+z)^-{omega}"),
            move |z| (1.0 + z).powf(-omega),
            move |z| -omega * (1.0 + z).powf(-omega - 1.0),
            move |z| omega * (omega + 1.0) * (1.0 + z).powf(-omega - 2.0),
        );
        if omega == 1.0 {
            h.with_primitive(|t| t.ln_1p())
        } else {
            h.with_primitive(move |t| ((1.0 + t).powf(1.0 - omega) - 1.0) / (1.0 - omega))
        }
    }

    /// `h(z) = ω/(ω+z)`.
    pub fn ratio(omega: f64) -> Self {
        Self::new(
            format!("{omega}/({omega}+z)"),
            move |z| omega / (omega + z),
            move |z| -omega / (omega + z).powi(2),
            move |z| 2.0 * omega / (omega + z).powi(3),
        )
        .with_primitive(move |t| omega * (t / omega).ln_1p())
    }

    pub fn unit() -> Self {
        Self::power(0.0)
    }

    pub fn h(&self, z: f64) -> f64 {
        (self.h)(z)
    }

    pub fn h_prime(&self, z: f64) -> f64 {
        (self.h_prime)(z)
    }

    pub fn h_double_prime(&self, z: f64) -> f64 {
        (self.h_double_prime)(z)
    }

    /// `Q_h(θ) = ∫₀^θ h`.
    pub fn q(&self, theta: f64) -> f64 {
        match &self.primitive {
            Some(q) => q(theta),
            None => adaptive_simpson(&|z| self.h(z), 0.0, theta, QUAD_TOL),
        }
    }

    /// Checks `h(0)=1`, monotone decrease and `h'' ≥ 2h'²` on a log grid of `[0, 10⁶]`.
    pub fn check_admissible(&self) -> Result<()> {
        let h0 = self.h(0.0);
        if (h0 - 1.0).abs() > 1e-12 {
            return Err(Error::Inadmissible(format!("{}: h(0) = {h0}", self.label)));
        }
        let mut zs = vec![0.0];
        zs.extend((0..=1200).map(|i| 10f64.powf(-6.0 + 12.0 * i as f64 / 1200.0)));
        let mut prev = h0;
        for &z in &zs {
            let (h, hp, hpp) = (self.h(z), self.h_prime(z), self.h_double_prime(z));
            if hp > 1e-14 || h > prev + 1e-14 {
                return Err(Error::Inadmissible(format!("{}: increasing at z = {z}", self.label)));
            }
            if hpp < 2.0 * hp * hp - 1e-12 * (hpp.abs() + 2.0 * hp * hp) - 1e-300 {
                return Err(Error::Inadmissible(format!("{}: h'' < 2h'^2 at z = {z}", self.label)));
            }
            prev = h;
        }
        Ok(())
    }
}

pub fn q_h(theta: &ScalarField, h: &HFunction) -> Result<ScalarField> {
    check_temperature(theta)?;
    Ok(theta.map(|t| h.q(t)))
}

/// `𝒦_h(θ) = ∫₀^θ κ(z) h(z) dz`.
pub fn k_h(theta: &ScalarField, h: &HFunction, law: &HeatLaw) -> Result<ScalarField> {
    check_temperature(theta)?;
    Ok(theta.map(|t| adaptive_simpson(&|z| law.kappa(1.0, z) * h.h(z), 0.0, t, QUAD_TOL)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalStepReport {
    pub theta_new: ScalarField,
    pub min_theta: f64,
    /// L² norm of the discrete equation residual at the new state.
    pub balance_residual: f64,
    /// Signed integral of the same residual.
    pub balance_integral: f64,
    /// `∫(ε+ρ)·(clipped amount)`.
    pub clipped_mass: f64,
    pub picard_iterations: usize,
}

/// Inputs of one thermal step with density moving from `rho_old` to `rho_new`.
#[derive(Debug, Clone, Copy)]
pub struct ThermalInput<'a> {
    pub theta: &'a ScalarField,
    pub rho_old: &'a ScalarField,
    pub rho_new: &'a ScalarField,
    pub u: &'a VectorField,
    pub law: &'a HeatLaw,
    pub eps_heat: f64,
    pub eps_sink: f64,
    pub dt: f64,
}

/// Viscous heating `𝕊:∇u = 2ρD(u):∇u`.
pub fn viscous_heating(rho: &ScalarField, u: &VectorField) -> ScalarField {
    &strain(u).contract(&jacobian(u)).scale(2.0) * rho
}

/// Explicit transport and source part of the thermal right-hand side.
pub(crate) fn explicit_rate(theta: &ScalarField, rho: &ScalarField, u: &VectorField) -> ScalarField {
    let rho_theta = rho * theta;
    let flux = u.map_components(|c| dealias(&(&rho_theta * c)));
    let heating = dealias(&viscous_heating(rho, u));
    let work = dealias(&(&rho_theta * &divergence(u)));
    &(&heating - &work) - &divergence(&flux)
}

/// `div(κ∇θ)` with pointwise conductivity `kappa`.
fn conduction(theta: &ScalarField, kappa: &ScalarField) -> ScalarField {
    divergence(&gradient(theta).mul_scalar(kappa))
}

/// Semi-discrete `d/dt[(ε+ρ)θ]`.
pub fn heat_rate(theta: &ScalarField, rho: &ScalarField, u: &VectorField, law: &HeatLaw, eps_sink: f64) -> ScalarField {
    let kk = theta.zip_map(rho, |t, r| law.primitive(r, t.max(0.0)));
    let sink = theta.map(|t| eps_sink * t.max(0.0).powf(law.alpha() + 1.0));
    &(&explicit_rate(theta, rho, u) + &laplacian(&kk)) - &sink
}

fn pcg(
    apply: &dyn Fn(&ScalarField) -> ScalarField,
    precond: &dyn Fn(&ScalarField) -> ScalarField,
    b: &ScalarField,
    x0: ScalarField,
) -> Result<ScalarField> {
    let dot = |a: &ScalarField, c: &ScalarField| -> f64 { a.values().iter().zip(c.values()).map(|(p, q)| p * q).sum() };
    let bnorm = dot(b, b).sqrt().max(1e-300);
    let mut x = x0;
    let mut r = b - &apply(&x);
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..500 {
        if dot(&r, &r).sqrt() <= 1e-14 * bnorm {
            return Ok(x);
        }
        let ap = apply(&p);
        let alpha = rz / dot(&p, &ap);
        x = x.zip_map(&p, |a, q| a + alpha * q);
        r = r.zip_map(&ap, |a, q| a - alpha * q);
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p = z.zip_map(&p, |a, q| a + beta * q);
    }
    let res = dot(&r, &r).sqrt() / bnorm;
    if res <= 1e-10 {
        Ok(x)
    } else {
        Err(Error::NonConvergence { solver: "conjugate gradient", iterations: 500, residual: res })
    }
}

pub fn step_temperature(
    theta: &ScalarField,
    rho: &ScalarField,
    u: &VectorField,
    law: &HeatLaw,
    eps: f64,
    dt: f64,
) -> Result<ThermalStepReport> {
    step_temperature_with(ThermalInput { theta, rho_old: rho, rho_new: rho, u, law, eps_heat: eps, eps_sink: eps, dt })
}

/// Linearly implicit step: conduction with lagged `κ(θ^m)` and sink with lagged
/// `θ^m^α`, Picard-iterated; transport and sources explicit.
pub fn step_temperature_with(inp: ThermalInput<'_>) -> Result<ThermalStepReport> {
    let ThermalInput { theta, rho_old, rho_new, u, law, eps_heat, eps_sink, dt } = inp;
    check_temperature(theta)?;
    for r in [rho_old, rho_new] {
        if !r.is_finite() || r.min() <= 0.0 {
            return Err(Error::NonpositiveDensity { min: r.min() });
        }
    }
    if theta.grid() != rho_new.grid() || theta.grid() != u.grid() {
        return Err(Error::GridMismatch);
    }
    let g = *theta.grid();
    let cap_old = rho_old.map(|r| eps_heat + r);
    let cap_new = rho_new.map(|r| eps_heat + r);
    let b = &(&cap_old * theta) + &explicit_rate(theta, rho_new, u).scale(dt);

    let mut current = theta.clone();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let kappa = current.zip_map(rho_new, |t, r| law.kappa(r, t));
        let diag = current.zip_map(&cap_new, |t, c| c + dt * eps_sink * t.max(0.0).powf(law.alpha()));
        let (dbar, kbar) =
            (diag.values().iter().sum::<f64>() / g.len() as f64, kappa.values().iter().sum::<f64>() / g.len() as f64);
        let apply = |x: &ScalarField| &(&diag * x) - &conduction(x, &kappa).scale(dt);
        let precond =
            |r: &ScalarField| {
                let half = g.points() / 2;
                r.spectrum()
                    .apply(|m, nyq| {
                        let k2: f64 =
                            m.iter()
                                .zip(nyq)
                                .map(|(&mi, &n)| {
                                    if n || mi.unsigned_abs() as usize == half {
                                        0.0
                                    } else {
                                        g.wavenumber(mi).powi(2)
                                    }
                                })
                                .sum();
                        Complex64::new(1.0 / (dbar + dt * kbar * k2), 0.0)
                    })
                    .to_field()
            };
        let next = pcg(&apply, &precond, &b, current.clone())?;
        let change = (&next - &current).max_abs();
        current = next;
        if change <= PICARD_TOL * current.max_abs().max(1.0) {
            break;
        }
        if iterations >= PICARD_MAX {
            return Err(Error::NonConvergence { solver: "thermal Picard", iterations, residual: change });
        }
    }
    if !current.is_finite() {
        return Err(Error::NonFinite("temperature after thermal step".into()));
    }

    let theta_new = current.map(|t| t.max(0.0));
    let clipped_mass = integrate(&(&cap_new * &(&theta_new - &current)));
    let rate = heat_rate(&theta_new, rho_new, u, law, eps_sink);
    let residual = &(&(&cap_new * &theta_new) - &(&cap_old * theta)).scale(1.0 / dt) - &rate;
    Ok(ThermalStepReport {
        min_theta: theta_new.min(),
        balance_residual: integrate(&residual.map(|v| v * v)).sqrt(),
        balance_integral: integrate(&residual),
        theta_new,
        clipped_mass,
        picard_iterations: iterations,
    })
}

/// Time-discrete residual of the renormalized balance
/// `d/dt∫(ε+ρ)Q_h + ε∫θ^{α+1}h = ∫h𝕊:∇u − ∫κh'|∇θ|² − ∫hρθ div u + ε∫Δρ(Q_h − θh)`,
/// right side evaluated at `after`.
pub fn renormalized_residual(
    before: &SystemState,
    after: &SystemState,
    h: &HFunction,
    law: &HeatLaw,
    params: &Params,
) -> Result<f64> {
    let dt = after.t - before.t;
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("non-increasing times {} -> {}", before.t, after.t)));
    }
    let eh = params.heat();
    let stored = |s: &SystemState| -> Result<f64> {
        let q = q_h(&s.theta, h)?;
        Ok(integrate(&(&s.rho.map(|r| eh + r) * &q)))
    };
    let fd = (stored(after)? - stored(before)?) / dt;

    let (rho, theta) = (&after.rho, &after.theta);
    let u = after.u();
    let hv = theta.map(|t| h.h(t));
    let hp = theta.map(|t| h.h_prime(t));
    let q = q_h(theta, h)?;
    let sink = params.sink() * integrate(&theta.zip_map(&hv, |t, hh| t.powf(law.alpha() + 1.0) * hh));
    let heating = integrate(&(&hv * &viscous_heating(rho, &u)));
    let kappa = theta.zip_map(rho, |t, r| law.kappa(r, t));
    let conduction = integrate(&(&(&kappa * &hp) * &gradient(theta).norm_sq()));
    let work = integrate(&(&(&hv * &(rho * theta)) * &divergence(&u)));
    let coupling = params.eps * integrate(&(&laplacian(rho) * &(&q - &(theta * &hv))));
    Ok(fd + sink - (heating - conduction - work + coupling))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;

    #[test]
    fn primitive_closed_forms() {
        let law2 = HeatLaw::constant(2.0, 1.0).unwrap();
        let law3 = HeatLaw::constant(3.0, 1.0).unwrap();
        assert!((law2.primitive(1.0, 1.0) - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(law2.primitive(1.0, 0.0), 0.0);
        assert!((law3.primitive(1.0, 2.0) - 6.0).abs() < 1e-14);
    }

    #[test]
    fn variable_conductivity_uses_quadrature() {
        let law = HeatLaw::new(2.0, Kappa0::Variable(Arc::new(|_, _| 1.0)), 0.5).unwrap();
        assert!((law.primitive(1.0, 1.0) - 4.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn law_validation() {
        assert!(HeatLaw::constant(1.5, 1.0).is_err());
        assert!(HeatLaw::new(2.0, Kappa0::Constant(5.0), 0.5).is_err());
        assert!(HeatLaw::new(2.0, Kappa0::Constant(1.0), 0.0).is_err());
    }

    #[test]
    fn h_primitives() {
        let h = HFunction::inverse_one_plus();
        assert!((h.q(std::f64::consts::E - 1.0) - 1.0).abs() < 1e-14);
        let unit = HFunction::unit();
        for t in [0.0, 0.5, 3.0] {
            assert!((unit.q(t) - t).abs() < 1e-14);
        }
        let small = HFunction::power(1e-9);
        assert!((small.q(2.0) - 2.0).abs() < 1e-8);
        let ratio = HFunction::ratio(0.5);
        let quad = adaptive_simpson(&|z| ratio.h(z), 0.0, 3.0, 1e-12);
        assert!((ratio.q(3.0) - quad).abs() < 1e-10);
    }

    #[test]
    fn k_h_closed_form() {
        let law = HeatLaw::constant(2.0, 1.0).unwrap();
        let g = Grid::periodic(1, 8).unwrap();
        let one = ScalarField::constant(g, 1.0);
        let kh = k_h(&one, &HFunction::inverse_one_plus(), &law).unwrap();
        let want = 2.0 * 2f64.ln() - 0.5;
        assert!(kh.values().iter().all(|v| (v - want).abs() < 1e-10));
    }

    #[test]
    fn admissibility() {
        assert!(HFunction::inverse_one_plus().check_admissible().is_ok());
        for w in [0.1, 0.5, 0.9] {
            assert!(HFunction::power(w).check_admissible().is_ok());
            assert!(HFunction::ratio(w).check_admissible().is_ok());
        }
        let bad = HFunction::new("1+z", |z| 1.0 + z, |_| 1.0, |_| 0.0);
        assert!(bad.check_admissible().is_err());
    }

    #[test]
    fn negative_temperature_rejected() {
        let g = Grid::periodic(1, 8).unwrap();
        let law = HeatLaw::constant(2.0, 1.0).unwrap();
        let t = ScalarField::constant(g, -0.1);
        assert!(matches!(k_of(&t, &law), Err(Error::NegativeTemperature { .. })));
        assert!(q_h(&t, &HFunction::unit()).is_err());
    }

    #[test]
    fn inverse_round_trip() {
        let law = HeatLaw::constant(3.0, 0.7).unwrap();
        for t in [0.0, 1e-6, 0.3, 1.0, 17.0, 250.0] {
            let k = law.primitive(1.0, t);
            let back = law.primitive_inverse(1.0, k).unwrap();
            assert!((back - t).abs() <= 1e-8 * t.max(1.0), "{t} -> {back}");
        }
    }

    #[test]
    fn equilibrium_step() {
        let g = Grid::periodic(1, 16).unwrap();
        let law = HeatLaw::constant(2.0, 1.0).unwrap();
        let theta = ScalarField::constant(g, 1.3);
        let rho = ScalarField::constant(g, 1.0);
        let r = step_temperature(&theta, &rho, &VectorField::zeros(g), &law, 0.0, 0.1).unwrap();
        assert!((&r.theta_new - &theta).max_abs() < 1e-13);
        assert!(r.balance_residual < 1e-12);
    }

    #[test]
    fn uniform_sink_matches_closed_form() {
        let g = Grid::periodic(1, 8).unwrap();
        let law = HeatLaw::constant(2.0, 1.0).unwrap();
        let (eps, th0) = (0.1f64, 2.0f64);
        let exact = |t: f64| (th0.powf(-2.0) + 2.0 * eps * t / (1.0 + eps)).powf(-0.5);
        let theta = ScalarField::constant(g, th0);
        let rho = ScalarField::constant(g, 1.0);
        let err = |dt: f64| {
            let r = step_temperature(&theta, &rho, &VectorField::zeros(g), &law, eps, dt).unwrap();
            (r.theta_new.values()[0] - exact(dt)).abs()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio - 4.0).abs() < 0.2, "local error ratio {ratio}");
    }

    #[test]
    fn shear_heating_raises_internal_energy() {
        let g = Grid::periodic(2, 16).unwrap();
        let law = HeatLaw::constant(2.0, 1.0).unwrap();
        let u = VectorField::new(vec![ScalarField::from_fn(g, |x| x[1].sin()), ScalarField::zeros(g)]).unwrap();
        let rho = ScalarField::constant(g, 1.0);
        let theta = ScalarField::constant(g, 0.5);
        let heating = integrate(&viscous_heating(&rho, &u));
        // ∫2|D|² = ∫ cos²y /... = 2π² for u = (sin y, 0)
        assert!((heating - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-10);
        let r = step_temperature(&theta, &rho, &u, &law, 0.0, 1e-3).unwrap();
        let gain = (integrate(&r.theta_new) - integrate(&theta)) / 1e-3;
        assert!(gain > 0.0);
        assert!((gain - heating).abs() < 1e-8 * heating);
    }
}

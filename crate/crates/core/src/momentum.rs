//! Galerkin momentum system `d/dt(M[ρ]λ) = F(ρ, λ, θ)`.
//!
//! Every force is formed as a strong-form vector field `f` and tested against
//! the basis, `F_i = ⟨f, e_i⟩`. Because spectral first derivatives are skew,
//! this coincides with the weak form after integration by parts.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::basis::{GalerkinBasis, GalerkinVelocity};
use crate::error::{Error, Result};
use crate::fields::{
    dealias, gradient, integrate, jacobian, laplacian, laplacian_power, strain, tensor_divergence, ScalarField,
    TensorField, VectorField,
};
use crate::params::Params;
use crate::state::SystemState;
use crate::transport::{check_density, density_rate};

pub const PICARD_TOL: f64 = 1e-10;
pub const PICARD_MAX: usize = 50;

/// Term names, in breakdown order.
pub const TERMS: [&str; 10] =
    ["convection", "viscous", "pressure", "biharmonic", "cold", "cross", "hyper", "drag0", "drag1", "capillary"];

#[derive(Debug, Clone)]
pub struct MassOperator {
    basis: GalerkinBasis,
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

/// `M_ij = ∫ρ e_i·e_j`; block structure follows from `e_{j·dim+c} = s_j 𝐞_c`.
pub fn assemble_mass(rho: &ScalarField, basis: &GalerkinBasis) -> Result<MassOperator> {
    if rho.grid() != basis.grid() {
        return Err(Error::GridMismatch);
    }
    if !rho.is_finite() {
        return Err(Error::NonFinite("density".into()));
    }
    let (n, dim) = (basis.n_modes(), basis.grid().dim());
    let weighted: Vec<ScalarField> = (0..n).map(|a| rho * basis.scalar(a)).collect();
    let mut matrix = DMatrix::zeros(n * dim, n * dim);
    for a in 0..n {
        for b in a..n {
            let v = integrate(&(&weighted[a] * basis.scalar(b)));
            for c in 0..dim {
                matrix[(a * dim + c, b * dim + c)] = v;
                matrix[(b * dim + c, a * dim + c)] = v;
            }
        }
    }
    let chol = Cholesky::new(matrix.clone()).ok_or(Error::Factorization)?;
    Ok(MassOperator { basis: basis.clone(), matrix, chol })
}

impl MassOperator {
    pub fn basis(&self) -> &GalerkinBasis {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(x)).iter().copied().collect()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.chol.solve(&DVector::from_column_slice(b)).iter().copied().collect()
    }

    /// Spectral norm of `M⁻¹`, i.e. `1/λ_min(M)`.
    pub fn inverse_norm(&self) -> f64 {
        let eig = SymmetricEigen::new(self.matrix.clone());
        1.0 / eig.eigenvalues.min()
    }
}

/// Strong-form force fields, one per term.
#[derive(Debug, Clone)]
pub struct ForceFields {
    fields: Vec<(&'static str, Option<VectorField>)>,
}

impl ForceFields {
    pub fn get(&self, name: &str) -> Option<&VectorField> {
        self.fields.iter().find(|(n, _)| *n == name).and_then(|(_, f)| f.as_ref())
    }

    /// `F_term(w) = ⟨f_term, w⟩` for every term; exact for `w ∈ X_N`.
    pub fn pair(&self, w: &VectorField) -> Vec<(&'static str, f64)> {
        self.fields.iter().map(|(n, f)| (*n, f.as_ref().map_or(0.0, |f| integrate(&f.dot(w))))).collect()
    }

    pub fn pair_total(&self, w: &VectorField) -> f64 {
        self.pair(w).iter().map(|(_, v)| v).sum()
    }

    pub fn project(&self, basis: &GalerkinBasis) -> Result<ForceBreakdown> {
        let zero = vec![0.0; basis.len()];
        let mut parts = Vec::with_capacity(self.fields.len());
        for (n, f) in &self.fields {
            let v = match f {
                Some(f) => basis.inner_products(f)?,
                None => zero.clone(),
            };
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteTerm(n));
            }
            parts.push((*n, v));
        }
        Ok(ForceBreakdown { parts })
    }
}

/// Per-term coefficient vectors `⟨f_term, e_i⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceBreakdown {
    parts: Vec<(&'static str, Vec<f64>)>,
}

impl ForceBreakdown {
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.parts.iter().find(|(n, _)| *n == name).map(|(_, v)| v.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &[f64])> {
        self.parts.iter().map(|(n, v)| (*n, v.as_slice()))
    }

    pub fn total(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.parts.first().map_or(0, |p| p.1.len())];
        for (_, v) in &self.parts {
            for (o, x) in out.iter_mut().zip(v) {
                *o += x;
            }
        }
        out
    }
}

fn require_finite(name: &'static str, f: VectorField) -> Result<VectorField> {
    if f.is_finite() {
        Ok(f)
    } else {
        Err(Error::NonFiniteTerm(name))
    }
}

/// Capillary force `κρ∇(Δ√ρ/√ρ)` written as `−2κP[Δs∇s] + κ∇P[sΔs]`, `s = √ρ`.
pub fn capillary_field(rho: &ScalarField, kappa: f64) -> VectorField {
    let s = rho.map(f64::sqrt);
    let lap_s = laplacian(&s);
    let grad_s = gradient(&s);
    let pair = grad_s.map_components(|c| dealias(&(&lap_s * c)).scale(-2.0 * kappa));
    let pot = gradient(&dealias(&(&lap_s * &s))).scale(kappa);
    &pair + &pot
}

pub fn force_fields(rho: &ScalarField, u: &VectorField, theta: &ScalarField, params: &Params) -> Result<ForceFields> {
    check_density(rho)?;
    if rho.grid() != u.grid() || rho.grid() != theta.grid() {
        return Err(Error::GridMismatch);
    }
    let g = *rho.grid();
    let dim = g.dim();
    let moving = u.max_abs() > 0.0;
    let mut fields: Vec<(&'static str, Option<VectorField>)> = Vec::with_capacity(10);

    let conv = moving.then(|| {
        let t = TensorField::from_fn(g, |i, j| dealias(&(&(rho * u.component(i)) * u.component(j))));
        tensor_divergence(&t).scale(-1.0)
    });
    fields.push(("convection", conv));

    let visc = moving.then(|| {
        let d = strain(u);
        tensor_divergence(&d.map_components(|c| dealias(&(rho * c)).scale(2.0)))
    });
    fields.push(("viscous", visc));

    fields.push(("pressure", Some(gradient(&dealias(&(rho * theta))).scale(-1.0))));

    let bi = (params.bi() > 0.0 && moving).then(|| u.map_components(|c| laplacian(&laplacian(c)).scale(-params.bi())));
    fields.push(("biharmonic", bi));

    let cold = (params.cold() > 0.0).then(|| gradient(&rho.map(|r| r.powi(-10))).scale(params.cold()));
    fields.push(("cold", cold));

    let cross = (params.cross() > 0.0 && moving).then(|| {
        let grad_rho = gradient(rho);
        let ju = jacobian(u);
        let comps = (0..dim)
            .map(|c| {
                let mut acc = ScalarField::zeros(g);
                for j in 0..dim {
                    acc = &acc + &(grad_rho.component(j) * ju.get(c, j));
                }
                dealias(&acc).scale(-params.cross())
            })
            .collect();
        VectorField::new(comps).expect("consistent grid")
    });
    fields.push(("cross", cross));

    let hyper = if params.hyper() > 0.0 {
        let d9 = laplacian_power(rho, 9)?;
        Some(gradient(&d9).map_components(|c| &dealias(c) * rho).scale(params.hyper()))
    } else {
        None
    };
    fields.push(("hyper", hyper));

    fields.push(("drag0", (params.r0 > 0.0 && moving).then(|| u.scale(-params.r0))));

    let drag1 = (params.r1 > 0.0 && moving).then(|| {
        let w = rho * &u.norm_sq();
        u.map_components(|c| dealias(&(&w * c)).scale(-params.r1))
    });
    fields.push(("drag1", drag1));

    fields.push(("capillary", (params.kappa_q > 0.0).then(|| capillary_field(rho, params.kappa_q))));

    let fields = fields
        .into_iter()
        .map(|(n, f)| f.map(|f| require_finite(n, f)).transpose().map(|f| (n, f)))
        .collect::<Result<_>>()?;
    Ok(ForceFields { fields })
}

pub fn assemble_forces(state: &SystemState, params: &Params) -> Result<ForceBreakdown> {
    force_fields(&state.rho, &state.u(), &state.theta, params)?.project(state.basis())
}

fn total_force(
    rho: &ScalarField,
    lambda: &[f64],
    theta: &ScalarField,
    basis: &GalerkinBasis,
    params: &Params,
) -> Result<Vec<f64>> {
    let u = basis.combine(lambda);
    Ok(force_fields(rho, &u, theta, params)?.project(basis)?.total())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stepper {
    /// Heun's method with the mass operator refreshed per stage.
    #[default]
    Rk2,
    /// Implicit Euler solved by Picard iteration.
    Picard,
}

/// Advances `λ` from `state.t` to `state.t + dt`, with density moving from
/// `state.rho` to `rho_next` over the step.
pub fn step_velocity(
    state: &SystemState,
    rho_next: &ScalarField,
    params: &Params,
    dt: f64,
    stepper: Stepper,
) -> Result<GalerkinVelocity> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt = {dt}")));
    }
    let basis = state.basis();
    let m_old = assemble_mass(&state.rho, basis)?;
    let m_new = assemble_mass(rho_next, basis)?;
    let lambda = state.lambda();
    let momentum = m_old.apply(lambda);
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * y).collect() };
    let next = match stepper {
        Stepper::Rk2 => {
            let f1 = total_force(&state.rho, lambda, &state.theta, basis, params)?;
            let pred = m_new.solve(&axpy(&momentum, dt, &f1));
            let f2 = total_force(rho_next, &pred, &state.theta, basis, params)?;
            let avg: Vec<f64> = f1.iter().zip(&f2).map(|(a, b)| 0.5 * (a + b)).collect();
            m_new.solve(&axpy(&momentum, dt, &avg))
        }
        Stepper::Picard => {
            let mut cur = lambda.to_vec();
            let mut iterations = 0;
            loop {
                iterations += 1;
                let f = total_force(rho_next, &cur, &state.theta, basis, params)?;
                let nxt = m_new.solve(&axpy(&momentum, dt, &f));
                let diff = nxt.iter().zip(&cur).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let scale = nxt.iter().map(|a| a * a).sum::<f64>().sqrt().max(1.0);
                cur = nxt;
                if diff <= PICARD_TOL * scale {
                    break;
                }
                if iterations >= PICARD_MAX || !diff.is_finite() {
                    return Err(Error::NonConvergence {
                        solver: "momentum Picard",
                        iterations,
                        residual: diff / scale,
                    });
                }
            }
            cur
        }
    };
    basis.velocity(next)
}

/// Largest stable step and the term that sets it.
pub fn stability_bound(state: &SystemState, params: &Params) -> (f64, &'static str) {
    let k2 = state.basis().max_k2();
    let k = k2.sqrt();
    let (rmin, rmax) = (state.rho.min(), state.rho.max());
    let u = state.u();
    let umax = u.max_abs();
    let usq = u.norm_sq().max();
    let tmax = state.theta.max().max(0.0);
    const OSC: f64 = 0.05;
    let osc = |omega: f64| if omega > 0.0 { OSC / omega } else { f64::INFINITY };
    let cand = [
        ("biharmonic", if params.bi() > 0.0 { 2.0 * rmin / (params.bi() * k2 * k2) } else { f64::INFINITY }),
        ("viscous", if k2 > 0.0 { rmin / (k2 * rmax) } else { f64::INFINITY }),
        ("drag0", if params.r0 > 0.0 { 2.0 * rmin / params.r0 } else { f64::INFINITY }),
        (
            "drag1",
            if params.r1 > 0.0 && usq > 0.0 { 2.0 * rmin / (3.0 * params.r1 * rmax * usq) } else { f64::INFINITY },
        ),
        ("hyper", osc(k.powi(10) * (params.hyper() * rmax * rmax / rmin).sqrt())),
        ("capillary", osc(k2 * (0.5 * params.kappa_q * rmax / rmin).sqrt())),
        ("pressure", osc(k * (2.0 * tmax).sqrt())),
        ("cold", osc(k * (11.0 * params.cold() * rmin.powi(-11)).sqrt())),
        ("convection", osc(umax * k)),
    ];
    cand.into_iter().fold((f64::INFINITY, "none"), |acc, (n, v)| if v < acc.0 { (v, n) } else { acc })
}

/// Mechanical energy `½∫ρ|u|² + (ε/10)∫ρ⁻¹⁰ + E_cap + E_hyper`.
pub fn mechanical_energy(state: &SystemState, params: &Params) -> Result<f64> {
    let e = crate::diagnostics::energy(state, params)?;
    Ok(e.kinetic + e.cold + e.capillary + e.hyper)
}

/// Exact semi-discrete rate of [`mechanical_energy`].
pub fn mechanical_rate(state: &SystemState, params: &Params) -> Result<f64> {
    let u = state.u();
    let forces = force_fields(&state.rho, &u, &state.theta, params)?;
    let rho_t = density_rate(&state.rho, &u, params.eps);
    let kinetic = forces.pair_total(&u) - 0.5 * integrate(&(&rho_t * &u.norm_sq()));
    Ok(kinetic + crate::diagnostics::potential_rates(&state.rho, &rho_t, params)?)
}

/// `FD(E_mech) − ½(rate_before + rate_after)`.
pub fn kinetic_energy_balance(before: &SystemState, after: &SystemState, params: &Params, dt: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt = {dt}")));
    }
    let fd = (mechanical_energy(after, params)? - mechanical_energy(before, params)?) / dt;
    Ok(fd - 0.5 * (mechanical_rate(before, params)? + mechanical_rate(after, params)?))
}

/// Contribution of both drags to `d/dt ½∫ρ|u|²`.
pub fn drag_power(state: &SystemState, params: &Params) -> Result<f64> {
    let u = state.u();
    let f = force_fields(&state.rho, &u, &state.theta, params)?;
    Ok(f.pair(&u).iter().filter(|(n, _)| n.starts_with("drag")).map(|(_, v)| v).sum())
}

/// Reference divergence of the viscous tensor for external checks.
pub fn viscous_power(state: &SystemState) -> f64 {
    let u = state.u();
    -2.0 * integrate(&(&state.rho * &strain(&u).norm_sq()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_basis;
    use crate::fields::Grid;

    fn state(rho: ScalarField, lambda: Vec<f64>, theta: ScalarField, basis: &GalerkinBasis) -> SystemState {
        SystemState::new(rho, basis.velocity(lambda).unwrap(), theta, 0.0).unwrap()
    }

    #[test]
    fn constant_density_mass_is_scaled_identity() {
        let g = Grid::periodic(2, 8).unwrap();
        let b = build_basis(g, 5).unwrap();
        let m = assemble_mass(&ScalarField::constant(g, 2.5), &b).unwrap();
        let diff = m.matrix() - DMatrix::identity(10, 10) * 2.5;
        assert!(diff.amax() < 1e-13);
        assert!((m.inverse_norm() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn mass_entries_against_quadrature() {
        let g = Grid::periodic(1, 32).unwrap();
        let b = build_basis(g, 3).unwrap();
        let rho = ScalarField::from_fn(g, |x| 1.0 + 0.5 * x[0].sin());
        let m = assemble_mass(&rho, &b).unwrap();
        // ∫(1 + ½ sin x) · (1/√2π) · (sin x/√π) = ½π / (√2π·√π)
        let pi = std::f64::consts::PI;
        assert!((m.matrix()[(0, 2)] - 0.5 * pi / ((2.0 * pi).sqrt() * pi.sqrt())).abs() < 1e-12);
        assert!((m.matrix()[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(m.matrix()[(1, 2)].abs() < 1e-12);
    }

    #[test]
    fn equilibrium_has_no_force() {
        let g = Grid::periodic(1, 16).unwrap();
        let b = build_basis(g, 5).unwrap();
        let p = Params { eps: 0.1, kappa_q: 0.1, r0: 1.0, r1: 1.0, ..Params::default() };
        let s = state(ScalarField::constant(g, 1.0), vec![0.0; 5], ScalarField::constant(g, 1.0), &b);
        let f = assemble_forces(&s, &p).unwrap();
        assert!(f.total().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn pressure_only_for_temperature_wave() {
        let g = Grid::periodic(1, 32).unwrap();
        let b = build_basis(g, 3).unwrap();
        let theta = ScalarField::from_fn(g, |x| 1.0 + 0.1 * x[0].sin());
        let s = state(ScalarField::constant(g, 1.0), vec![0.0; 3], theta, &b);
        let f = assemble_forces(&s, &Params::default()).unwrap();
        // ∫θ div ψ: zero on sin x, ∫0.1 sin x · (−sin x/√π) = −0.1√π on cos x
        let pres = f.get("pressure").unwrap();
        let pi = std::f64::consts::PI;
        assert!((pres[1] + 0.1 * pi.sqrt()).abs() < 1e-12, "{pres:?}");
        assert!(pres[2].abs() < 1e-12 && pres[0].abs() < 1e-12);
        for (n, v) in f.iter() {
            if n != "pressure" {
                assert!(v.iter().all(|x| x.abs() < 1e-12), "{n}");
            }
        }
    }

    #[test]
    fn drag0_is_minus_identity() {
        let g = Grid::periodic(1, 16).unwrap();
        let b = build_basis(g, 5).unwrap();
        let lambda = vec![0.3, -0.2, 0.5, 0.1, -0.7];
        let s = state(ScalarField::constant(g, 1.0), lambda.clone(), ScalarField::constant(g, 1.0), &b);
        let f = assemble_forces(&s, &Params { r0: 1.0, ..Params::default() }).unwrap();
        for (a, l) in f.get("drag0").unwrap().iter().zip(&lambda) {
            assert!((a + l).abs() < 1e-12);
        }
    }

    #[test]
    fn drag_decay_local_order() {
        let g = Grid::periodic(1, 16).unwrap();
        let b = build_basis(g, 3).unwrap();
        let p = Params { r0: 2.0, ..Params::default() };
        let s = state(ScalarField::constant(g, 1.0), vec![1.0, 0.0, 0.0], ScalarField::constant(g, 0.0), &b);
        let err = |dt: f64| {
            let v = step_velocity(&s, &s.rho, &p, dt, Stepper::Rk2).unwrap();
            (v.lambda()[0] - (-2.0 * dt).exp()).abs()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio - 8.0).abs() < 0.5, "{ratio}");
    }

    #[test]
    fn capillary_pair_matches_strong_form() {
        let g = Grid::periodic(1, 64).unwrap();
        let rho = ScalarField::from_fn(g, |x| 1.5 + 0.3 * x[0].sin());
        let kappa = 0.7;
        let f = capillary_field(&rho, kappa);
        let s = rho.map(f64::sqrt);
        let q = &laplacian(&s) * &s.map(|v| 1.0 / v);
        let strong = gradient(&q).mul_scalar(&rho).scale(kappa);
        let b = build_basis(g, 9).unwrap();
        let a = b.inner_products(&f).unwrap();
        let c = b.inner_products(&strong).unwrap();
        let scale = c.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (x, y) in a.iter().zip(&c) {
            assert!((x - y).abs() <= 1e-6 * scale);
        }
    }

    #[test]
    fn viscous_power_is_dissipative() {
        let g = Grid::periodic(2, 16).unwrap();
        let b = build_basis(g, 9).unwrap();
        let lambda: Vec<f64> = (0..18).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.1).collect();
        let rho = ScalarField::from_fn(g, |x| 1.0 + 0.2 * x[0].cos() * x[1].sin());
        let s = state(rho, lambda, ScalarField::constant(g, 1.0), &b);
        let f = force_fields(&s.rho, &s.u(), &s.theta, &Params::default()).unwrap();
        let pv = f.pair(&s.u()).into_iter().find(|(n, _)| *n == "viscous").unwrap().1;
        assert!(pv < 0.0);
        assert!((pv - viscous_power(&s)).abs() < 1e-10 * pv.abs());
    }

    #[test]
    fn picard_agrees_with_rk2_to_first_order() {
        let g = Grid::periodic(1, 16).unwrap();
        let b = build_basis(g, 3).unwrap();
        let p = Params { r0: 1.0, ..Params::default() };
        let s = state(ScalarField::constant(g, 1.0), vec![1.0, 0.0, 0.0], ScalarField::constant(g, 0.0), &b);
        let v = step_velocity(&s, &s.rho, &p, 0.01, Stepper::Picard).unwrap();
        assert!((v.lambda()[0] - 1.0 / 1.01).abs() < 1e-9);
    }

    #[test]
    fn hyper_bound_names_term() {
        let g = Grid::periodic(1, 64).unwrap();
        let b = build_basis(g, 8).unwrap();
        let rho = ScalarField::from_fn(g, |x| 1.0 + 0.1 * x[0].sin());
        let s = state(rho, vec![0.0; 8], ScalarField::constant(g, 1.0), &b);
        let (dt, term) = stability_bound(&s, &Params { eps: 1e-3, ..Params::default() });
        assert_eq!(term, "hyper");
        assert!(dt < 2e-4);
    }
}

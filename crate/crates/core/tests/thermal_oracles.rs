use nsfg_core::basis::build_basis;
use nsfg_core::fields::{Grid, ScalarField, VectorField};
use nsfg_core::params::Params;
use nsfg_core::state::SystemState;
use nsfg_core::thermal::{
    adaptive_simpson, k_h, q_h, renormalized_residual, step_temperature, step_temperature_with, HFunction, HeatLaw,
    ThermalInput,
};
use nsfg_core::transport::step_density;
use proptest::prelude::*;

/// Classical RK4 on the uniform balance `(ε+1)θ' = −εθ^{α+1}`.
fn ode_reference(theta0: f64, eps: f64, alpha: f64, t: f64) -> f64 {
    let f = |th: f64| -eps * th.powf(alpha + 1.0) / (eps + 1.0);
    let steps = 20_000;
    let h = t / steps as f64;
    let mut y = theta0;
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f(y + 0.5 * h * k1);
        let k3 = f(y + 0.5 * h * k2);
        let k4 = f(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y
}

#[test]
fn uniform_ode_against_reference() {
    let g = Grid::periodic(1, 8).unwrap();
    let law = HeatLaw::constant(2.0, 1.0).unwrap();
    let rho = ScalarField::constant(g, 1.0);
    let u = VectorField::zeros(g);
    let (eps, th0) = (0.1, 1.5);
    let mut errs = vec![];
    for dt in [0.02, 0.01] {
        let th = ScalarField::constant(g, th0);
        let r = step_temperature(&th, &rho, &u, &law, eps, dt).unwrap();
        errs.push((r.theta_new.values()[3] - ode_reference(th0, eps, 2.0, dt)).abs());
    }
    assert!(errs[1] < 1e-5 && errs[0] / errs[1] > 3.5, "{errs:?}");
}

#[test]
fn k_h_against_quadrature() {
    let law = HeatLaw::constant(2.0, 1.0).unwrap();
    let h = HFunction::inverse_one_plus();
    let g = Grid::periodic(1, 8).unwrap();
    for t in [0.5f64, 1.0, 4.0] {
        let closed = t * t / 2.0 - t + 2.0 * (1.0 + t).ln();
        let v = k_h(&ScalarField::constant(g, t), &h, &law).unwrap().values()[0];
        let quad = adaptive_simpson(&|z| (1.0 + z * z) / (1.0 + z), 0.0, t, 1e-12);
        assert!((v - closed).abs() < 1e-10 && (quad - closed).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn q_h_sublinear_and_monotone(a in 0.0..50.0f64, b in 0.0..50.0f64, w in 0.05..0.95f64) {
        let g = Grid::periodic(1, 8).unwrap();
        for h in [HFunction::inverse_one_plus(), HFunction::power(w), HFunction::ratio(w)] {
            let qa = q_h(&ScalarField::constant(g, a), &h).unwrap().values()[0];
            let qb = q_h(&ScalarField::constant(g, b), &h).unwrap().values()[0];
            prop_assert!(qa <= a + 1e-12);
            prop_assert!((a - b) * (qa - qb) >= -1e-12);
        }
    }

    #[test]
    fn primitive_round_trip(t in 0.0..100.0f64, alpha in 2.0..5.0f64, k0 in 0.6..1.7f64) {
        let law = HeatLaw::constant(alpha, k0).unwrap();
        let back = law.primitive_inverse(1.0, law.primitive(1.0, t)).unwrap();
        prop_assert!((back - t).abs() <= 1e-8 * t.max(1.0));
    }

    #[test]
    fn temperature_stays_nonnegative(amp in 0.0..1.0f64, k in 1u32..6, speed in -1.0..1.0f64, dt in 1e-3..5e-2f64) {
        let g = Grid::periodic(1, 32).unwrap();
        let law = HeatLaw::constant(2.0, 1.0).unwrap();
        let theta = ScalarField::from_fn(g, |x| amp * (1.0 + (k as f64 * x[0]).sin()).powi(4) / 16.0);
        let rho = ScalarField::from_fn(g, |x| 1.0 + 0.3 * x[0].cos());
        let u = VectorField::new(vec![ScalarField::from_fn(g, |x| speed * x[0].sin())]).unwrap();
        let r = step_temperature(&theta, &rho, &u, &law, 0.01, dt).unwrap();
        prop_assert!(r.min_theta >= 0.0);
    }
}

fn coupled_state(g: Grid, rho: ScalarField, theta: ScalarField, lambda: Vec<f64>, t: f64) -> SystemState {
    let b = build_basis(g, 3).unwrap();
    SystemState::new(rho, b.velocity(lambda).unwrap(), theta, t).unwrap()
}

/// Transport + thermal with a frozen Galerkin velocity up to `t_end`; returns the
/// last two states and the last step's balance integral.
fn frozen_velocity_run(dt: f64, t_end: f64, params: &Params, law: &HeatLaw) -> (SystemState, SystemState, f64) {
    let g = Grid::periodic(1, 32).unwrap();
    let lambda = vec![0.0, 0.2, -0.1];
    let mut s = coupled_state(
        g,
        ScalarField::from_fn(g, |x| 1.0 + 0.2 * x[0].sin()),
        ScalarField::from_fn(g, |x| 1.0 + 0.5 * x[0].cos()),
        lambda.clone(),
        0.0,
    );
    let u = s.u();
    let steps = (t_end / dt).round() as usize;
    let mut prev = s.clone();
    let mut integral = 0.0;
    for _ in 0..steps {
        let rho_new = step_density(&s.rho, &u, params.eps, dt).unwrap().rho_new;
        let rep = step_temperature_with(ThermalInput {
            theta: &s.theta,
            rho_old: &s.rho,
            rho_new: &rho_new,
            u: &u,
            law,
            eps_heat: params.heat(),
            eps_sink: params.sink(),
            dt,
        })
        .unwrap();
        integral = rep.balance_integral;
        prev = s.clone();
        s = coupled_state(g, rho_new, rep.theta_new, lambda.clone(), s.t + dt);
    }
    (prev, s, integral)
}

#[test]
fn unit_weight_reduces_to_balance() {
    let law = HeatLaw::constant(2.0, 1.0).unwrap();
    let params = Params { eps: 0.05, ..Params::default() };
    let (a, b, integral) = frozen_velocity_run(1e-3, 5e-3, &params, &law);
    let r = renormalized_residual(&a, &b, &HFunction::unit(), &law, &params).unwrap();
    assert!((r - integral).abs() < 1e-9 * integral.abs().max(1.0), "{r} vs {integral}");
}

#[test]
fn equilibrium_residual_vanishes() {
    let g = Grid::periodic(1, 16).unwrap();
    let law = HeatLaw::constant(2.0, 1.0).unwrap();
    let s0 = coupled_state(g, ScalarField::constant(g, 1.0), ScalarField::constant(g, 2.0), vec![0.0; 3], 0.0);
    let mut s1 = s0.clone();
    s1.t = 0.1;
    let r = renormalized_residual(&s0, &s1, &HFunction::inverse_one_plus(), &law, &Params::default()).unwrap();
    assert!(r.abs() < 1e-10);
}

#[test]
fn renormalized_residual_first_order() {
    let law = HeatLaw::constant(2.0, 1.0).unwrap();
    let params = Params { eps: 0.05, ..Params::default() };
    let h = HFunction::inverse_one_plus();
    let res: Vec<f64> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| {
            let (a, b, _) = frozen_velocity_run(dt, 0.04, &params, &law);
            renormalized_residual(&a, &b, &h, &law, &params).unwrap().abs()
        })
        .collect();
    let order = (res[0] / res[2]).log2() / 2.0;
    assert!(order >= 0.9, "residuals {res:?}, order {order}");
}

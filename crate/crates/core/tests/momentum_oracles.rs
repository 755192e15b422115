use nsfg_core::basis::build_basis;
use nsfg_core::fields::{Grid, ScalarField};
use nsfg_core::momentum::{assemble_mass, drag_power, step_velocity, viscous_power, Stepper};
use nsfg_core::params::Params;
use nsfg_core::state::SystemState;
use proptest::prelude::*;

fn density(g: Grid, c: &[f64]) -> ScalarField {
    ScalarField::from_fn(g, |x| {
        1.0 + c.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * x[0] + 0.7 * k as f64).sin()).sum::<f64>()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn inverse_norm_bound(c in prop::collection::vec(-0.3..0.3f64, 1..4)) {
        let g = Grid::periodic(1, 32).unwrap();
        let rho = density(g, &c);
        let m = assemble_mass(&rho, &build_basis(g, 8).unwrap()).unwrap();
        prop_assert!(m.inverse_norm() <= (1.0 + 1e-8) / rho.min());
    }

    #[test]
    fn drag_and_viscosity_dissipate(c in prop::collection::vec(-0.3..0.3f64, 1..3), lam in prop::collection::vec(-1.0..1.0f64, 5)) {
        let g = Grid::periodic(1, 32).unwrap();
        let b = build_basis(g, 5).unwrap();
        let s = SystemState::new(density(g, &c), b.velocity(lam).unwrap(), ScalarField::constant(g, 1.0), 0.0).unwrap();
        let p = Params { r0: 0.7, r1: 1.3, ..Params::default() };
        prop_assert!(drag_power(&s, &p).unwrap() <= 0.0);
        prop_assert!(viscous_power(&s) <= 0.0);
    }
}

#[test]
fn zero_force_keeps_lambda() {
    let g = Grid::periodic(1, 16).unwrap();
    let b = build_basis(g, 3).unwrap();
    let s =
        SystemState::new(ScalarField::constant(g, 2.0), b.zero_velocity(), ScalarField::constant(g, 1.0), 0.0).unwrap();
    let v = step_velocity(&s, &s.rho, &Params::default(), 0.1, Stepper::Rk2).unwrap();
    assert!(v.lambda().iter().all(|x| x.abs() < 1e-14));
}

#[test]
fn rk2_second_order_full_terms() {
    let g = Grid::periodic(1, 32).unwrap();
    let b = build_basis(g, 3).unwrap();
    let p = Params { eps: 0.01, eps_hyper: Some(1e-6), kappa_q: 0.05, r0: 0.2, r1: 0.3, ..Params::default() };
    let rho = density(g, &[0.2, 0.1]);
    let theta = ScalarField::from_fn(g, |x| 1.0 + 0.2 * x[0].cos());
    let s0 = SystemState::new(rho.clone(), b.velocity(vec![0.1, 0.5, -0.4]).unwrap(), theta, 0.0).unwrap();
    let run = |dt: f64| {
        let mut s = s0.clone();
        for _ in 0..(0.2 / dt).round() as usize {
            let v = step_velocity(&s, &rho, &p, dt, Stepper::Rk2).unwrap();
            s = SystemState { velocity: v, t: s.t + dt, ..s };
        }
        s.lambda().to_vec()
    };
    let reference = run(1e-4);
    let err = |dt: f64| run(dt).iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let (e1, e2) = (err(0.02), err(0.01));
    assert!((e1 / e2).log2() > 1.8, "{e1} {e2}");
}

#[test]
fn singular_density_fails_factorization() {
    let g = Grid::periodic(1, 16).unwrap();
    let b = build_basis(g, 3).unwrap();
    let rho = ScalarField::from_fn(g, |x| -1.0 + 0.1 * x[0].cos());
    assert!(assemble_mass(&rho, &b).is_err());
}

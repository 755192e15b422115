use nsfg_core::fields::{integrate, Grid, ScalarField, VectorField};
use nsfg_core::transport::{advective_dt_bound, step_density, step_density_with, TransportScheme};
use proptest::prelude::*;

fn smooth_velocity(g: Grid, a: &[f64]) -> VectorField {
    let comps = (0..g.dim())
        .map(|c| {
            ScalarField::from_fn(g, |x| {
                a.iter().enumerate().map(|(k, ak)| ak * ((k + 1) as f64 * x[c % g.dim()] + c as f64 + x[0]).sin()).sum()
            })
        })
        .collect();
    VectorField::new(comps).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mass_and_envelope(a in prop::collection::vec(-1.0..1.0f64, 1..4), amp in 0.0..0.8f64, eps in 0.0..0.05f64, frac in 0.05..1.0f64, strang in any::<bool>()) {
        let g = Grid::periodic(1, 64).unwrap();
        let rho = ScalarField::from_fn(g, |x| 1.0 + amp * (2.0 * x[0]).cos());
        let u = smooth_velocity(g, &a);
        let dt = frac * advective_dt_bound(&u).min(0.1);
        let scheme = if strang { TransportScheme::Strang } else { TransportScheme::Imex };
        let r = step_density_with(&rho, &u, eps, dt, scheme).unwrap();
        prop_assert!(r.mass_drift.abs() <= 1e-12);
        prop_assert!(r.min_rho > 0.0);
        prop_assert!(r.bound_check, "envelope failed: min {} max {}", r.min_rho, r.max_rho);
    }
}

#[test]
fn long_run_mass_drift() {
    let g = Grid::periodic(2, 16).unwrap();
    // divergence-free, so the density is only rearranged
    let u = VectorField::new(vec![
        ScalarField::from_fn(g, |x| 0.5 * x[1].sin()),
        ScalarField::from_fn(g, |x| -0.3 * x[0].cos()),
    ])
    .unwrap();
    let mut rho = ScalarField::from_fn(g, |x| 1.0 + 0.3 * x[0].sin() * x[1].cos());
    let m0 = integrate(&rho);
    let dt = 0.5 * advective_dt_bound(&u);
    for _ in 0..1000 {
        rho = step_density(&rho, &u, 0.01, dt).unwrap().rho_new;
    }
    assert!(((integrate(&rho) - m0) / m0).abs() <= 1e-10);
}

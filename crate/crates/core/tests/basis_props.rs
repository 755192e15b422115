use nalgebra::{DMatrix, DVector};
use nsfg_core::basis::{build_basis, project, reconstruct};
use nsfg_core::fields::{integrate, lp_norm, Grid, Lp, ScalarField, VectorField};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(g: Grid, rng: &mut ChaCha8Rng) -> VectorField {
    let comps = (0..g.dim())
        .map(|_| {
            let v: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            ScalarField::new(g, v).unwrap()
        })
        .collect();
    VectorField::new(comps).unwrap()
}

#[test]
fn gram_matrix_is_identity() {
    for (dim, pts, n) in [(1, 16, 9), (2, 8, 20), (3, 8, 12)] {
        let g = Grid::periodic(dim, pts).unwrap();
        let b = build_basis(g, n).unwrap();
        for i in 0..b.len() {
            for j in 0..b.len() {
                let v = integrate(&b.element(i).dot(&b.element(j)));
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12, "({i},{j}) = {v}");
            }
        }
    }
}

#[test]
fn projection_is_least_squares() {
    let g = Grid::periodic(1, 16).unwrap();
    let b = build_basis(g, 7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let v = random_field(g, &mut rng);
    // least squares with quadrature weights: minimize Σ w (v − Σ c_i e_i)²
    let w = g.volume() / g.len() as f64;
    let a = DMatrix::from_fn(g.len(), b.len(), |p, i| b.element(i).component(0).values()[p] * w.sqrt());
    let rhs = DVector::from_iterator(g.len(), v.component(0).values().iter().map(|x| x * w.sqrt()));
    let ls = a.clone().svd(true, true).solve(&rhs, 1e-14).unwrap();
    let proj = project(&v, &b).unwrap();
    for (x, y) in proj.lambda().iter().zip(ls.iter()) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn round_trip_on_coefficients() {
    let g = Grid::periodic(2, 8).unwrap();
    let b = build_basis(g, 13).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let lambda: Vec<f64> = (0..b.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let gv = b.velocity(lambda.clone()).unwrap();
    let back = project(&reconstruct(&gv), &b).unwrap();
    for (x, y) in back.lambda().iter().zip(&lambda) {
        assert!((x - y).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sup_norm_equivalence(coeffs in prop::collection::vec(-3.0..3.0f64, 10)) {
        let g = Grid::periodic(2, 8).unwrap();
        let b = build_basis(g, 5).unwrap();
        let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        let u = reconstruct(&b.velocity(coeffs).unwrap());
        prop_assert!(u.max_abs() <= b.sup_norm_constant() * norm + 1e-12);
    }

    #[test]
    fn projection_contracts(seed in 0u64..1000) {
        let g = Grid::periodic(2, 8).unwrap();
        let b = build_basis(g, 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_field(g, &mut rng);
        let pv = reconstruct(&project(&v, &b).unwrap());
        let l2 = |f: &VectorField| f.components().iter().map(|c| lp_norm(c, Lp::Two).powi(2)).sum::<f64>().sqrt();
        prop_assert!(l2(&pv) <= l2(&v) + 1e-12);
        let twice = reconstruct(&project(&pv, &b).unwrap());
        prop_assert!((&twice - &pv).max_abs() < 1e-12);
    }
}

//! Real trigonometric Galerkin space X_N.
//!
//! `N` counts scalar modes; every scalar mode is paired with each unit
//! vector, so a velocity carries `N·dim` coefficients. Coefficient `j·dim + c`
//! belongs to scalar mode `j` in component `c`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::{integrate, Grid, ScalarField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Constant,
    Cos,
    Sin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMode {
    pub wavevector: Vec<i64>,
    pub parity: Parity,
}

#[derive(Debug)]
struct BasisData {
    grid: Grid,
    modes: Vec<ScalarMode>,
    samples: Vec<ScalarField>,
}

#[derive(Debug, Clone)]
pub struct GalerkinBasis {
    data: Arc<BasisData>,
}

impl PartialEq for GalerkinBasis {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.data, &other.data)
            || (self.data.grid == other.data.grid && self.data.modes == other.data.modes)
    }
}

/// Representative wavevectors of the real modes, ordered by |k|² then lexicographically.
fn ordered_wavevectors(grid: &Grid) -> Vec<Vec<i64>> {
    let half = (grid.points() / 2) as i64;
    let range: Vec<i64> = (-(half - 1)..half).collect();
    let mut all: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..grid.dim() {
        all = all
            .into_iter()
            .flat_map(|prefix| {
                range.iter().map(move |&m| {
                    let mut v = prefix.clone();
                    v.push(m);
                    v
                })
            })
            .collect();
    }
    let mut reps: Vec<Vec<i64>> = all
        .into_iter()
        .filter(|k| match k.iter().find(|&&m| m != 0) {
            None => true,
            Some(&m) => m > 0,
        })
        .collect();
    reps.sort_by(|a, b| {
        let na: i64 = a.iter().map(|m| m * m).sum();
        let nb: i64 = b.iter().map(|m| m * m).sum();
        na.cmp(&nb).then_with(|| a.cmp(b))
    });
    reps
}

pub fn build_basis(grid: Grid, n: usize) -> Result<GalerkinBasis> {
    let available = (grid.points() - 1).pow(grid.dim() as u32);
    if n == 0 || n > available {
        return Err(Error::BasisTooLarge { requested: n, available });
    }
    let mut modes = Vec::with_capacity(n);
    for k in ordered_wavevectors(&grid) {
        if modes.len() == n {
            break;
        }
        if k.iter().all(|&m| m == 0) {
            modes.push(ScalarMode { wavevector: k, parity: Parity::Constant });
        } else {
            modes.push(ScalarMode { wavevector: k.clone(), parity: Parity::Cos });
            if modes.len() < n {
                modes.push(ScalarMode { wavevector: k, parity: Parity::Sin });
            }
        }
    }
    let vol = grid.volume();
    let samples = modes
        .iter()
        .map(|mode| {
            let kphys: Vec<f64> = mode.wavevector.iter().map(|&m| 2.0 * PI / grid.length() * m as f64).collect();
            match mode.parity {
                Parity::Constant => ScalarField::constant(grid, 1.0 / vol.sqrt()),
                Parity::Cos | Parity::Sin => {
                    let amp = (2.0 / vol).sqrt();
                    let sin = mode.parity == Parity::Sin;
                    ScalarField::from_fn(grid, |x| {
                        let phase: f64 = x.iter().zip(&kphys).map(|(a, b)| a * b).sum();
                        amp * if sin { phase.sin() } else { phase.cos() }
                    })
                }
            }
        })
        .collect();
    Ok(GalerkinBasis { data: Arc::new(BasisData { grid, modes, samples }) })
}

impl GalerkinBasis {
    pub fn grid(&self) -> &Grid {
        &self.data.grid
    }

    /// Number of scalar modes.
    pub fn n_modes(&self) -> usize {
        self.data.modes.len()
    }

    /// Number of vector basis functions (length of λ).
    pub fn len(&self) -> usize {
        self.data.modes.len() * self.data.grid.dim()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn modes(&self) -> &[ScalarMode] {
        &self.data.modes
    }

    pub fn scalar(&self, j: usize) -> &ScalarField {
        &self.data.samples[j]
    }

    /// Largest |m| over all axes and modes.
    pub fn max_mode(&self) -> i64 {
        self.data.modes.iter().flat_map(|m| m.wavevector.iter().map(|k| k.abs())).max().unwrap_or(0)
    }

    /// Largest physical |k|² over the modes.
    pub fn max_k2(&self) -> f64 {
        let g = self.grid();
        self.data
            .modes
            .iter()
            .map(|m| m.wavevector.iter().map(|&k| g.wavenumber(k).powi(2)).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Vector basis function `i` as a field.
    pub fn element(&self, i: usize) -> VectorField {
        let dim = self.grid().dim();
        let (j, c) = (i / dim, i % dim);
        let comps =
            (0..dim).map(|a| if a == c { self.scalar(j).clone() } else { ScalarField::zeros(*self.grid()) }).collect();
        VectorField::new(comps).expect("consistent grid")
    }

    /// `Σ ‖e_i‖_∞`, bounding `‖u‖_{C⁰} ≤ C(N)‖λ‖₂`.
    pub fn sup_norm_constant(&self) -> f64 {
        let per_scalar: f64 = self.data.samples.iter().map(ScalarField::max_abs).sum();
        per_scalar * self.grid().dim() as f64
    }

    /// Coefficients `⟨v, e_i⟩`.
    pub fn inner_products(&self, v: &VectorField) -> Result<Vec<f64>> {
        if v.grid() != self.grid() {
            return Err(Error::GridMismatch);
        }
        let dim = self.grid().dim();
        let mut out = vec![0.0; self.len()];
        for (j, s) in self.data.samples.iter().enumerate() {
            for c in 0..dim {
                out[j * dim + c] = integrate(&(v.component(c) * s));
            }
        }
        Ok(out)
    }

    pub fn velocity(&self, lambda: Vec<f64>) -> Result<GalerkinVelocity> {
        if lambda.len() != self.len() {
            return Err(Error::CoefficientLength { got: lambda.len(), expected: self.len() });
        }
        if lambda.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("velocity coefficients".into()));
        }
        Ok(GalerkinVelocity { basis: self.clone(), lambda })
    }

    pub fn zero_velocity(&self) -> GalerkinVelocity {
        GalerkinVelocity { basis: self.clone(), lambda: vec![0.0; self.len()] }
    }

    pub fn combine(&self, coeffs: &[f64]) -> VectorField {
        assert_eq!(coeffs.len(), self.len(), "coefficient length");
        let g = *self.grid();
        let dim = g.dim();
        let mut comps: Vec<Vec<f64>> = vec![vec![0.0; g.len()]; dim];
        for (j, s) in self.data.samples.iter().enumerate() {
            for (c, comp) in comps.iter_mut().enumerate() {
                let a = coeffs[j * dim + c];
                if a != 0.0 {
                    for (o, v) in comp.iter_mut().zip(s.values()) {
                        *o += a * v;
                    }
                }
            }
        }
        VectorField::new(comps.into_iter().map(|v| ScalarField::from_raw(g, v)).collect()).expect("consistent grid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinVelocity {
    basis: GalerkinBasis,
    lambda: Vec<f64>,
}

impl GalerkinVelocity {
    pub fn basis(&self) -> &GalerkinBasis {
        &self.basis
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn into_lambda(self) -> Vec<f64> {
        self.lambda
    }
}

pub fn project(v: &VectorField, basis: &GalerkinBasis) -> Result<GalerkinVelocity> {
    let lambda = basis.inner_products(v)?;
    basis.velocity(lambda)
}

pub fn reconstruct(gv: &GalerkinVelocity) -> VectorField {
    gv.basis.combine(&gv.lambda)
}

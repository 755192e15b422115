//! Scalar and vector fields on the periodic box with Fourier differentiation.
//!
//! Samples are stored row-major (axis 0 slowest). Derivatives multiply by
//! `(i k)^order` in frequency space; the Nyquist mode is dropped for odd
//! orders so derivatives of real fields stay real.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    points: usize,
    length: f64,
}

impl Grid {
    pub fn new(dim: usize, points: usize, length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dim {dim} not in 1..=3")));
        }
        if points < 8 || !points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("points per axis {points} must be even and >= 8")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length {length} must be positive")));
        }
        Ok(Self { dim, points, length })
    }

    /// Box of side 2π.
    pub fn periodic(dim: usize, points: usize) -> Result<Self> {
        Self::new(dim, points, 2.0 * PI)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Physical wavenumber of integer mode `m`.
    pub fn wavenumber(&self, m: i64) -> f64 {
        2.0 * PI / self.length * m as f64
    }

    /// Signed integer mode of FFT index `j`; index `points/2` maps to `-points/2`.
    pub fn mode(&self, j: usize) -> i64 {
        let n = self.points as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    pub fn index_of_mode(&self, m: i64) -> usize {
        m.rem_euclid(self.points as i64) as usize
    }

    pub fn multi_index(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for a in (0..self.dim).rev() {
            idx[a] = flat % self.points;
            flat /= self.points;
        }
        idx
    }

    pub fn coordinates(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = idx[a] as f64 * h;
        }
        x
    }

    /// Largest retained |mode| under the 2/3 rule.
    pub fn dealias_cutoff(&self) -> i64 {
        ((self.points as i64) - 1) / 3
    }
}

fn fft_nd(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    let n = grid.points;
    let fft = plan(n, inverse);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..grid.dim {
        let stride = n.pow((grid.dim - 1 - axis) as u32);
        let outer = n.pow(axis as u32);
        if stride == 1 {
            fft.process(data);
            continue;
        }
        for o in 0..outer {
            for i in 0..stride {
                let start = o * n * stride + i;
                for (j, c) in line.iter_mut().enumerate() {
                    *c = data[start + j * stride];
                }
                fft.process(&mut line);
                for (j, c) in line.iter().enumerate() {
                    data[start + j * stride] = *c;
                }
            }
        }
    }
    if inverse {
        let s = 1.0 / data.len() as f64;
        for c in data.iter_mut() {
            *c *= s;
        }
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!("{} values for a grid of {} points", values.len(), grid.len())));
        }
        check_finite(&values, "field values")?;
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self::from_raw(grid, vec![c; grid.len()])
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f(x)` at the grid points; `x` has `dim` entries.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|p| {
                let x = grid.coordinates(p);
                f(&x[..grid.dim])
            })
            .collect();
        Self::from_raw(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination. Panics if the grids differ.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        Self::from_raw(self.grid, self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn spectrum(&self) -> Spectrum {
        let mut data: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_nd(&self.grid, &mut data, false);
        Spectrum { grid: self.grid, data }
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a * b)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.map(|a| -a)
    }
}

/// Relative magnitude below which spectral coefficients count as round-off.
pub const NOISE_FLOOR: f64 = 1e-13;

/// Discrete Fourier coefficients of a real field (unnormalized forward DFT).
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: Grid,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.data
    }

    /// Multiplies each coefficient by `m(modes, nyquist)`, with integer modes per axis.
    pub fn apply(&self, m: impl Fn(&[i64], &[bool]) -> Complex64) -> Spectrum {
        let g = self.grid;
        let half = g.points / 2;
        let mut modes = [0i64; 3];
        let mut nyq = [false; 3];
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(p, &c)| {
                let idx = g.multi_index(p);
                for a in 0..g.dim {
                    modes[a] = g.mode(idx[a]);
                    nyq[a] = idx[a] == half;
                }
                c * m(&modes[..g.dim], &nyq[..g.dim])
            })
            .collect();
        Spectrum { grid: g, data }
    }

    pub fn to_field(&self) -> ScalarField {
        let mut data = self.data.clone();
        fft_nd(&self.grid, &mut data, true);
        ScalarField::from_raw(self.grid, data.iter().map(|c| c.re).collect())
    }

    pub fn derivative(&self, axis: usize, order: u32) -> Result<ScalarField> {
        if axis >= self.grid.dim {
            return Err(Error::AxisOutOfRange { axis, dim: self.grid.dim });
        }
        if order == 0 {
            return Err(Error::ZeroOrder);
        }
        let g = self.grid;
        let unit =
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, -1.0)]
                [(order % 4) as usize];
        Ok(self
            .apply(|m, nyq| {
                if order % 2 == 1 && nyq[axis] {
                    Complex64::new(0.0, 0.0)
                } else {
                    unit * g.wavenumber(m[axis]).powi(order as i32)
                }
            })
            .to_field())
    }

    pub fn laplacian_power(&self, p: u32) -> Result<ScalarField> {
        if !(1..=9).contains(&p) {
            return Err(Error::UnsupportedPower(p));
        }
        Ok(self.laplacian_power_unchecked(p))
    }

    pub(crate) fn laplacian_power_unchecked(&self, p: u32) -> ScalarField {
        let g = self.grid;
        self.apply(|m, _| {
            let k2: f64 = m.iter().map(|&mi| g.wavenumber(mi).powi(2)).sum();
            Complex64::new((-k2).powi(p as i32), 0.0)
        })
        .to_field()
    }

    /// Zeroes coefficients smaller than [`NOISE_FLOOR`] times the largest one.
    pub fn denoised(&self) -> Spectrum {
        let peak = self.data.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let floor = NOISE_FLOOR * peak;
        let data = self.data.iter().map(|&c| if c.norm() < floor { Complex64::new(0.0, 0.0) } else { c }).collect();
        Spectrum { grid: self.grid, data }
    }

    /// Zeroes every mode with |m| beyond the 2/3 cutoff on any axis.
    pub fn dealiased(&self) -> Spectrum {
        let cut = self.grid.dealias_cutoff();
        self.apply(
            |m, _| {
                if m.iter().all(|mi| mi.abs() <= cut) {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            },
        )
    }
}

pub fn derivative(f: &ScalarField, axis: usize, order: u32) -> Result<ScalarField> {
    check_finite(&f.values, "derivative input")?;
    f.spectrum().derivative(axis, order)
}

/// `Δ^p f` after discarding round-off-level coefficients (see [`Spectrum::denoised`]);
/// without this, `|k|^{2p}` amplifies transform noise at high modes.
pub fn laplacian_power(f: &ScalarField, p: u32) -> Result<ScalarField> {
    f.spectrum().denoised().laplacian_power(p)
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    f.spectrum().laplacian_power_unchecked(1)
}

/// 2/3-rule filter applied to a field.
pub fn dealias(f: &ScalarField) -> ScalarField {
    f.spectrum().dealiased().to_field()
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let s = f.spectrum();
    let components = (0..f.grid.dim).map(|a| s.derivative(a, 1).expect("axis within dim")).collect();
    VectorField { grid: f.grid, components }
}

pub fn divergence(v: &VectorField) -> ScalarField {
    let mut acc = ScalarField::zeros(v.grid);
    for (a, c) in v.components.iter().enumerate() {
        let d = c.spectrum().derivative(a, 1).expect("axis within dim");
        acc = &acc + &d;
    }
    acc
}

/// Full second-derivative matrix of a scalar field.
pub fn hessian(f: &ScalarField) -> TensorField {
    let g = f.grid;
    let s = f.spectrum();
    let mut comps = Vec::with_capacity(g.dim * g.dim);
    for i in 0..g.dim {
        for j in 0..g.dim {
            let field = if i == j {
                s.derivative(i, 2).expect("axis within dim")
            } else {
                s.apply(|m, nyq| {
                    if nyq[i] || nyq[j] {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::new(-g.wavenumber(m[i]) * g.wavenumber(m[j]), 0.0)
                    }
                })
                .to_field()
            };
            comps.push(field);
        }
    }
    TensorField { grid: g, dim: g.dim, comps }
}

/// Velocity gradient `(∇v)_{ij} = ∂_j v_i`.
pub fn jacobian(v: &VectorField) -> TensorField {
    let g = v.grid;
    let mut comps = Vec::with_capacity(g.dim * g.dim);
    for c in &v.components {
        let s = c.spectrum();
        for j in 0..g.dim {
            comps.push(s.derivative(j, 1).expect("axis within dim"));
        }
    }
    TensorField { grid: g, dim: g.dim, comps }
}

/// Symmetric gradient `D(v) = (∇v + ∇vᵀ)/2`.
pub fn strain(v: &VectorField) -> TensorField {
    let j = jacobian(v);
    let d = j.dim;
    let mut comps = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            comps.push(j.get(a, b).zip_map(j.get(b, a), |x, y| 0.5 * (x + y)));
        }
    }
    TensorField { grid: j.grid, dim: d, comps }
}

/// Row-wise divergence `(div T)_i = Σ_j ∂_j T_{ij}`.
pub fn tensor_divergence(t: &TensorField) -> VectorField {
    let g = t.grid;
    let components = (0..t.dim)
        .map(|i| {
            let mut acc = ScalarField::zeros(g);
            for j in 0..t.dim {
                let d = t.get(i, j).spectrum().derivative(j, 1).expect("axis within dim");
                acc = &acc + &d;
            }
            acc
        })
        .collect();
    VectorField { grid: g, components }
}

/// Periodic trapezoidal quadrature: mean times volume.
pub fn integrate(f: &ScalarField) -> f64 {
    let sum: f64 = f.values.iter().sum();
    sum / f.values.len() as f64 * f.grid.volume()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lp {
    One,
    Two,
    Four,
    Inf,
}

pub fn lp_norm(f: &ScalarField, p: Lp) -> f64 {
    match p {
        Lp::One => integrate(&f.map(f64::abs)),
        Lp::Two => integrate(&f.map(|v| v * v)).sqrt(),
        Lp::Four => integrate(&f.map(|v| v.powi(4))).powf(0.25),
        Lp::Inf => f.max_abs(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let grid =
            *components.first().ok_or_else(|| Error::InvalidGrid("vector field without components".into()))?.grid();
        if components.len() != grid.dim {
            return Err(Error::InvalidGrid(format!(
                "{} components on a {}-dimensional grid",
                components.len(),
                grid.dim
            )));
        }
        if components.iter().any(|c| c.grid != grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, components })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, components: vec![ScalarField::zeros(grid); grid.dim] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn component(&self, a: usize) -> &ScalarField {
        &self.components[a]
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self { grid: self.grid, components: self.components.iter().map(f).collect() }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map_components(|f| f.scale(c))
    }

    /// Multiplies every component by a scalar field.
    pub fn mul_scalar(&self, s: &ScalarField) -> Self {
        self.map_components(|f| f * s)
    }

    pub fn dot(&self, other: &Self) -> ScalarField {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let mut acc = ScalarField::zeros(self.grid);
        for (a, b) in self.components.iter().zip(&other.components) {
            acc = &acc + &(a * b);
        }
        acc
    }

    pub fn norm_sq(&self) -> ScalarField {
        self.dot(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.norm_sq().max().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(ScalarField::is_finite)
    }
}

impl Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: &VectorField) -> VectorField {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        VectorField {
            grid: self.grid,
            components: self.components.iter().zip(&rhs.components).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: &VectorField) -> VectorField {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        VectorField {
            grid: self.grid,
            components: self.components.iter().zip(&rhs.components).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Square `dim × dim` matrix of fields, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    grid: Grid,
    dim: usize,
    comps: Vec<ScalarField>,
}

impl TensorField {
    pub fn from_fn(grid: Grid, f: impl Fn(usize, usize) -> ScalarField) -> Self {
        let dim = grid.dim;
        let comps = (0..dim * dim).map(|p| f(p / dim, p % dim)).collect();
        Self { grid, dim, comps }
    }

    pub fn get(&self, i: usize, j: usize) -> &ScalarField {
        &self.comps[i * self.dim + j]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Pointwise Frobenius product `A:B`.
    pub fn contract(&self, other: &Self) -> ScalarField {
        let mut acc = ScalarField::zeros(self.grid);
        for (a, b) in self.comps.iter().zip(&other.comps) {
            acc = &acc + &(a * b);
        }
        acc
    }

    pub fn norm_sq(&self) -> ScalarField {
        self.contract(self)
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self { grid: self.grid, dim: self.dim, comps: self.comps.iter().map(f).collect() }
    }

    pub fn trace(&self) -> ScalarField {
        let mut acc = ScalarField::zeros(self.grid);
        for a in 0..self.dim {
            acc = &acc + self.get(a, a);
        }
        acc
    }
}

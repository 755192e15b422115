//! Cut-off families: density cut-offs `φ_m`, `φ_K` and the truncated
//! log-energy `φ̃_n` with its vector lift `φ_n(u) = φ̃_n(|u|²)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fields::{ScalarField, VectorField};

/// Quintic smoothstep `6t⁵ − 15t⁴ + 10t³`, clamped to `[0, 1]`.
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

pub fn smoothstep_prime(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    30.0 * t * t * (1.0 - t) * (1.0 - t)
}

/// Peak slope of [`smoothstep`].
pub const SMOOTHSTEP_MAX_SLOPE: f64 = 1.875;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityCutoff {
    /// `φ_m`: 0 below `1/(2m)`, 1 above `1/m`.
    Lower(f64),
    /// `φ_K`: 1 below `K`, 0 above `2K`.
    Upper(f64),
}

impl DensityCutoff {
    pub fn lower(m: f64) -> Result<Self> {
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::InvalidParameter(format!("m = {m}")));
        }
        Ok(Self::Lower(m))
    }

    pub fn upper(k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidParameter(format!("K = {k}")));
        }
        Ok(Self::Upper(k))
    }

    pub fn value(&self, rho: f64) -> f64 {
        match *self {
            Self::Lower(m) => smoothstep(2.0 * m * rho - 1.0),
            Self::Upper(k) => 1.0 - smoothstep((rho - k) / k),
        }
    }

    pub fn derivative(&self, rho: f64) -> f64 {
        match *self {
            Self::Lower(m) => 2.0 * m * smoothstep_prime(2.0 * m * rho - 1.0),
            Self::Upper(k) => -smoothstep_prime((rho - k) / k) / k,
        }
    }

    /// Sharp bound on `|φ'|`: `3.75m` for the lower and `1.875/K` for the upper cut-off.
    pub fn slope_bound(&self) -> f64 {
        match *self {
            Self::Lower(m) => 2.0 * m * SMOOTHSTEP_MAX_SLOPE,
            Self::Upper(k) => SMOOTHSTEP_MAX_SLOPE / k,
        }
    }
}

/// Sharp bound on `|ρφ'_m(ρ)|`, i.e. `max_{t∈[0,1]} (1+t)s'(t)`.
pub fn lower_cutoff_rho_slope_bound() -> f64 {
    // ternary search on the unimodal (1+t)s'(t)
    let f = |t: f64| (1.0 + t) * smoothstep_prime(t);
    let (mut a, mut b) = (0.3, 0.9);
    for _ in 0..200 {
        let (c, d) = (a + (b - a) / 3.0, b - (b - a) / 3.0);
        if f(c) < f(d) {
            a = c;
        } else {
            b = d;
        }
    }
    f(0.5 * (a + b))
}

/// Plateau knot `C_n = e(1+n)² − 1`.
pub fn c_n(n: f64) -> f64 {
    std::f64::consts::E * (1.0 + n).powi(2) - 1.0
}

fn check_y(y: f64, n: f64) -> Result<()> {
    if !(y >= 0.0) {
        return Err(Error::NegativeArgument(y));
    }
    if !(n >= 0.0 && n.is_finite()) {
        return Err(Error::InvalidParameter(format!("n = {n}")));
    }
    Ok(())
}

/// `φ̃_n(y)`: `(1+y)ln(1+y)` on `[0,n]`, a concave bridge on `[n, C_n]`, then flat.
pub fn phi_tilde_n(y: f64, n: f64) -> Result<f64> {
    check_y(y, n)?;
    let l = n.ln_1p();
    let cn = c_n(n);
    Ok(if y <= n {
        (1.0 + y) * y.ln_1p()
    } else if y <= cn {
        2.0 * (1.0 + l) * y - (1.0 + y) * y.ln_1p() + 2.0 * l - 2.0 * n
    } else {
        cn - 1.0 - 2.0 * n
    })
}

pub fn phi_tilde_n_prime(y: f64, n: f64) -> Result<f64> {
    check_y(y, n)?;
    let l = n.ln_1p();
    Ok(if y <= n {
        1.0 + y.ln_1p()
    } else if y <= c_n(n) {
        1.0 + 2.0 * l - y.ln_1p()
    } else {
        0.0
    })
}

pub fn phi_tilde_n_double(y: f64, n: f64) -> Result<f64> {
    check_y(y, n)?;
    Ok(if y <= n {
        1.0 / (1.0 + y)
    } else if y <= c_n(n) {
        -1.0 / (1.0 + y)
    } else {
        0.0
    })
}

/// `∇φ_n(u) = 2φ̃'_n(|u|²) u`.
pub fn phi_n_prime_vec(u: &[f64], n: f64) -> Result<Vec<f64>> {
    let y: f64 = u.iter().map(|v| v * v).sum();
    let d = phi_tilde_n_prime(y, n)?;
    Ok(u.iter().map(|v| 2.0 * d * v).collect())
}

/// `∇²φ_n(u) = 2(2φ̃''_n(|u|²) u⊗u + φ̃'_n(|u|²) I)`.
pub fn phi_n_double_mat(u: &[f64], n: f64) -> Result<DMatrix<f64>> {
    let y: f64 = u.iter().map(|v| v * v).sum();
    let (d1, d2) = (phi_tilde_n_prime(y, n)?, phi_tilde_n_double(y, n)?);
    let k = u.len();
    Ok(DMatrix::from_fn(k, k, |i, j| 2.0 * (2.0 * d2 * u[i] * u[j] + if i == j { d1 } else { 0.0 })))
}

/// `v = φ_m(ρ)φ_K(ρ)u`.
pub fn truncated_velocity(rho: &ScalarField, u: &VectorField, m: f64, k: f64) -> Result<VectorField> {
    if rho.grid() != u.grid() {
        return Err(Error::GridMismatch);
    }
    let (lo, hi) = (DensityCutoff::lower(m)?, DensityCutoff::upper(k)?);
    let phi = rho.map(|r| lo.value(r) * hi.value(r));
    Ok(u.mul_scalar(&phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn knot_values() {
        assert_eq!(phi_tilde_n(0.0, 3.0).unwrap(), 0.0);
        for y in [E - 1.0, 5.0, 100.0] {
            assert!((phi_tilde_n(y, 0.0).unwrap() - (E - 2.0)).abs() < 1e-15);
        }
        let y = 4.0 * E - 1.0;
        let l2 = 2f64.ln();
        let middle = 2.0 * (1.0 + l2) * y - (1.0 + y) * y.ln_1p() + 2.0 * (l2 - 1.0);
        assert!((middle - (4.0 * E - 4.0)).abs() < 1e-12);
        assert!((phi_tilde_n(y, 1.0).unwrap() - (4.0 * E - 4.0)).abs() < 1e-12);
    }

    #[test]
    fn gradient_vanishes_at_zero_and_on_plateau() {
        assert_eq!(phi_n_prime_vec(&[0.0, 0.0], 2.0).unwrap(), vec![0.0, 0.0]);
        let big = (c_n(1.0) + 1.0).sqrt();
        assert!(phi_n_prime_vec(&[big, 0.0, 0.0], 1.0).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let u = [0.7, -0.4, 1.1];
        let n = 1.5;
        let h = phi_n_double_mat(&u, n).unwrap();
        let step = 1e-5;
        for j in 0..3 {
            let mut up = u;
            let mut dn = u;
            up[j] += step;
            dn[j] -= step;
            let gp = phi_n_prime_vec(&up, n).unwrap();
            let gm = phi_n_prime_vec(&dn, n).unwrap();
            for i in 0..3 {
                assert!(((gp[i] - gm[i]) / (2.0 * step) - h[(i, j)]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn cutoff_plateaus() {
        let lo = DensityCutoff::lower(2.0).unwrap();
        let hi = DensityCutoff::upper(3.0).unwrap();
        assert_eq!(lo.value(0.2), 0.0);
        assert_eq!(lo.value(0.5), 1.0);
        assert_eq!(lo.value(7.0), 1.0);
        assert_eq!(hi.value(2.9), 1.0);
        assert_eq!(hi.value(6.0), 0.0);
        assert!(DensityCutoff::lower(0.0).is_err());
    }

    #[test]
    fn sharp_rho_slope_bound() {
        let b = lower_cutoff_rho_slope_bound();
        assert!(b > 1.0 / 2f64.ln() && b < 3.0, "{b}");
    }

    #[test]
    fn negative_argument_rejected() {
        assert!(phi_tilde_n(-1.0, 1.0).is_err());
    }
}

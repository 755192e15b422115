//! Functional inequalities for positive densities:
//! `∫ρ|∇²log ρ|² ≥ (1/7)∫|∇²√ρ|²` and `≥ (1/8)∫|∇ρ^{1/4}|⁴`.

use crate::error::Result;
use crate::fields::{gradient, hessian, integrate, ScalarField};
use crate::transport::check_density;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JungelReport {
    pub lhs: f64,
    pub rhs1: f64,
    pub rhs2: f64,
    pub pass: bool,
}

impl JungelReport {
    /// `(lhs − max(rhs))/lhs`, or 0 when all sides vanish.
    pub fn relative_margin(&self) -> f64 {
        let gap = self.lhs - self.rhs1.max(self.rhs2);
        if self.lhs > 0.0 {
            gap / self.lhs
        } else {
            gap
        }
    }
}

pub fn jungel_check(rho: &ScalarField) -> Result<JungelReport> {
    check_density(rho)?;
    let lhs = integrate(&(rho * &hessian(&rho.map(f64::ln)).norm_sq()));
    let rhs1 = integrate(&hessian(&rho.map(f64::sqrt)).norm_sq()) / 7.0;
    let rhs2 = integrate(&gradient(&rho.map(|r| r.powf(0.25))).norm_sq().map(|v| v * v)) / 8.0;
    let pass = lhs >= rhs1.max(rhs2) - 1e-12 * lhs;
    Ok(JungelReport { lhs, rhs1, rhs2, pass })
}

//! Regularization parameters with per-term overrides of ε.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// Global ε; also the density diffusion coefficient.
    pub eps: f64,
    pub eps_bi: Option<f64>,
    pub eps_cold: Option<f64>,
    pub eps_cross: Option<f64>,
    pub eps_hyper: Option<f64>,
    /// ε in the thermal capacity (ε+ρ).
    pub eps_heat: Option<f64>,
    /// ε in the sink εθ^{α+1}.
    pub eps_sink: Option<f64>,
    pub kappa_q: f64,
    pub r0: f64,
    pub r1: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            eps: 0.0,
            eps_bi: None,
            eps_cold: None,
            eps_cross: None,
            eps_hyper: None,
            eps_heat: None,
            eps_sink: None,
            kappa_q: 0.0,
            r0: 0.0,
            r1: 0.0,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("eps", Some(self.eps)),
            ("eps_bi", self.eps_bi),
            ("eps_cold", self.eps_cold),
            ("eps_cross", self.eps_cross),
            ("eps_hyper", self.eps_hyper),
            ("eps_heat", self.eps_heat),
            ("eps_sink", self.eps_sink),
            ("kappa_q", Some(self.kappa_q)),
            ("r0", Some(self.r0)),
            ("r1", Some(self.r1)),
        ];
        for (name, v) in named {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::InvalidParameter(format!("{name} = {v} must be finite and >= 0")));
                }
            }
        }
        Ok(())
    }

    pub fn bi(&self) -> f64 {
        self.eps_bi.unwrap_or(self.eps)
    }

    pub fn cold(&self) -> f64 {
        self.eps_cold.unwrap_or(self.eps)
    }

    pub fn cross(&self) -> f64 {
        self.eps_cross.unwrap_or(self.eps)
    }

    pub fn hyper(&self) -> f64 {
        self.eps_hyper.unwrap_or(self.eps)
    }

    pub fn heat(&self) -> f64 {
        self.eps_heat.unwrap_or(self.eps)
    }

    pub fn sink(&self) -> f64 {
        self.eps_sink.unwrap_or(self.eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_default_to_global() {
        let p = Params { eps: 0.3, eps_hyper: Some(1e-9), ..Params::default() };
        assert_eq!(p.bi(), 0.3);
        assert_eq!(p.sink(), 0.3);
        assert_eq!(p.hyper(), 1e-9);
    }

    #[test]
    fn negative_values_rejected() {
        assert!(Params { r0: -1.0, ..Params::default() }.validate().is_err());
        assert!(Params { eps_cold: Some(f64::NAN), ..Params::default() }.validate().is_err());
        assert!(Params::default().validate().is_ok());
    }
}

//! Protocol parameters and series stopping rules.

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Result};

/// Squeezing λ, channel transmittance η and subtraction transmittance T.
///
/// Everything else (R, T̃, R̃, r) is derived on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    lambda: f64,
    eta: f64,
    t: f64,
}

impl ProtocolParams {
    pub fn new(lambda: f64, eta: f64, t: f64) -> Result<Self> {
        check_range("λ", lambda, (0.0..1.0).contains(&lambda), "[0, 1)")?;
        check_range("η", eta, (0.0..=1.0).contains(&eta), "[0, 1]")?;
        check_range("T", t, t > 0.0 && t <= 1.0, "(0, 1]")?;
        Ok(Self { lambda, eta, t })
    }

    /// Parameters for the state before distillation (no subtraction, T = 1).
    pub fn before(lambda: f64, eta: f64) -> Result<Self> {
        Self::new(lambda, eta, 1.0)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Reflectance of the subtraction beamsplitter.
    pub fn r(&self) -> f64 {
        1.0 - self.t
    }

    /// T̃ = 1 − ηR.
    pub fn t_tilde(&self) -> f64 {
        1.0 - self.eta * self.r()
    }

    /// R̃ = 1 − ηT.
    pub fn r_tilde(&self) -> f64 {
        1.0 - self.eta * self.t
    }

    /// Squeezing strength r = artanh λ.
    pub fn squeezing(&self) -> f64 {
        self.lambda.atanh()
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(lambda, self.eta, self.t)
    }

    pub fn with_t(&self, t: f64) -> Result<Self> {
        Self::new(self.lambda, self.eta, t)
    }
}

/// Stop rule for the infinite sums in the block formulas.
///
/// A sum stops once `consecutive_small` successive terms each fall below
/// `term_rel_tol` times the running sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesTolerance {
    pub term_rel_tol: f64,
    pub consecutive_small: usize,
    pub max_terms: usize,
}

impl Default for SeriesTolerance {
    fn default() -> Self {
        Self {
            term_rel_tol: 1e-14,
            consecutive_small: 3,
            max_terms: 1_000_000,
        }
    }
}

impl SeriesTolerance {
    pub fn with_rel_tol(term_rel_tol: f64) -> Result<Self> {
        check_range("term_rel_tol", term_rel_tol, term_rel_tol > 0.0, "(0, ∞)")?;
        Ok(Self {
            term_rel_tol,
            ..Self::default()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities_follow_setters() {
        let p = ProtocolParams::new(0.5, 0.5, 0.9).unwrap();
        assert!((p.r() - 0.1).abs() < 1e-15);
        assert!((p.t_tilde() - 0.95).abs() < 1e-15);
        assert!((p.r_tilde() - 0.55).abs() < 1e-15);
        let q = p.with_t(0.7).unwrap();
        assert!((q.t_tilde() - 0.85).abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_domain() {
        assert!(ProtocolParams::new(1.0, 0.5, 0.5).is_err());
        assert!(ProtocolParams::new(-0.1, 0.5, 0.5).is_err());
        assert!(ProtocolParams::new(0.5, 1.1, 0.5).is_err());
        assert!(ProtocolParams::new(0.5, 0.5, 0.0).is_err());
        assert!(ProtocolParams::new(f64::NAN, 0.5, 0.5).is_err());
        assert!(ProtocolParams::new(0.0, 0.0, 1.0).is_ok());
    }
}

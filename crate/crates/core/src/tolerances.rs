//! Tolerance policy shared by every check in the crate.

use serde::{Deserialize, Serialize};

use crate::error::{HodgeError, Result};

/// Absolute tolerances used by identity checks, finite-difference checks and
/// positivity tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Exact algebraic identities (`∂̄² = 0`, Hodge decomposition, ...).
    pub eq_tol: f64,
    /// Finite-difference comparisons.
    pub fd_tol: f64,
    /// Lower margin for determinants and eigenvalues treated as nonzero.
    pub pd_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eq_tol: 1e-10,
            fd_tol: 1e-6,
            pd_margin: 1e-12,
        }
    }
}

impl Tolerances {
    pub fn new(eq_tol: f64, fd_tol: f64, pd_margin: f64) -> Result<Self> {
        let tol = Self {
            eq_tol,
            fd_tol,
            pd_margin,
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eq_tol", self.eq_tol),
            ("fd_tol", self.fd_tol),
            ("pd_margin", self.pd_margin),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(HodgeError::invalid(format!(
                    "tolerance {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn with_eq_tol(mut self, eq_tol: f64) -> Self {
        self.eq_tol = eq_tol;
        self
    }
}

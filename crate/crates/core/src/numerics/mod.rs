//! Scalar root finding, adaptive quadrature and explicit ODE integration.
//!
//! Every routine takes its function as a fallible closure so errors raised
//! deep inside (for example a failed inversion in an ODE right-hand side)
//! propagate to the caller unchanged.

mod ode;
mod quad;
mod root;

pub use ode::{integrate_ode, OdeOptions, Stop, Trajectory};
pub use quad::{integrate_adaptive, QuadEstimate};
pub use root::find_root;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval handed to a root finder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidBracket { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Relative/absolute tolerance pair plus an iteration budget.
///
/// `max_iter` means iterations for root finding, subdivisions for
/// quadrature and accepted-plus-rejected steps for ODE integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iter: usize,
}

impl ToleranceSpec {
    pub fn new(rel_tol: f64, abs_tol: f64, max_iter: usize) -> Result<Self> {
        let tol = Self {
            rel_tol,
            abs_tol,
            max_iter,
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::InvalidTolerance("rel_tol must be positive"));
        }
        if !(self.abs_tol >= 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::InvalidTolerance("abs_tol must be non-negative"));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidTolerance("max_iter must be at least 1"));
        }
        Ok(())
    }

    /// Absolute tolerance at magnitude `scale`.
    #[inline]
    pub fn at(&self, scale: f64) -> f64 {
        self.abs_tol + self.rel_tol * scale.abs()
    }
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_iter: 200,
        }
    }
}

#[inline]
pub(crate) fn check_finite(x: f64, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { x, value })
    }
}

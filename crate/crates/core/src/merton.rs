//! Closed-form perpetual put under constant volatility and the constant
//! volatility sub/super-solutions that bracket the nonlinear problem.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{find_root, Bracket, ToleranceSpec};
use crate::volatility::VolatilityModel;

/// Merton's perpetual put with exponent `gamma = 2r / sigma^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MertonSolution {
    pub gamma: f64,
    pub strike: f64,
    /// Early exercise boundary `E gamma / (1 + gamma)`.
    pub boundary: f64,
}

impl MertonSolution {
    pub fn new(gamma: f64, strike: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParams(format!("gamma must be positive, got {gamma}")));
        }
        if !(strike > 0.0 && strike.is_finite()) {
            return Err(Error::InvalidParams(format!("strike must be positive, got {strike}")));
        }
        Ok(Self {
            gamma,
            strike,
            boundary: strike * gamma / (1.0 + gamma),
        })
    }

    pub fn from_market(r: f64, sigma0: f64, strike: f64) -> Result<Self> {
        Self::new(merton_gamma(r, sigma0)?, strike)
    }

    /// Option value; intrinsic below the boundary.
    pub fn price(&self, s: f64) -> f64 {
        if s <= self.boundary {
            self.strike - s
        } else {
            self.strike / (1.0 + self.gamma) * (s / self.boundary).powf(-self.gamma)
        }
    }

    pub fn delta(&self, s: f64) -> f64 {
        if s <= self.boundary {
            -1.0
        } else {
            -self.gamma * self.strike / ((1.0 + self.gamma) * self.boundary)
                * (s / self.boundary).powf(-self.gamma - 1.0)
        }
    }

    /// `S d^2V/dS^2`; zero in the exercise region.
    pub fn gamma_h(&self, s: f64) -> f64 {
        if s <= self.boundary {
            0.0
        } else {
            self.gamma * self.strike / self.boundary * (s / self.boundary).powf(-self.gamma - 1.0)
        }
    }

    /// Transformed variable `W(x) = (r/S)(V - S V')` at `S = e^x` above the boundary:
    /// `r E rho^gamma e^{-(1+gamma) x}`.
    pub fn transformed(&self, r: f64, x: f64) -> f64 {
        r * self.strike * (self.gamma * self.boundary.ln() - (1.0 + self.gamma) * x).exp()
    }
}

fn check_rate(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("r must be positive, got {r}")))
    }
}

/// `2r / sigma0^2`.
pub fn merton_gamma(r: f64, sigma0: f64) -> Result<f64> {
    check_rate(r)?;
    if !(sigma0 > 0.0 && sigma0.is_finite()) {
        return Err(Error::InvalidParams(format!("sigma0 must be positive, got {sigma0}")));
    }
    Ok(2.0 * r / (sigma0 * sigma0))
}

/// Exponent of the sub-solution: `gamma sigma(0)^2 = 2r`.
pub fn gamma_minus(model: &VolatilityModel, r: f64) -> Result<f64> {
    check_rate(r)?;
    Ok(2.0 * r / model.variance_sq(1.0, 0.0)?)
}

/// Exponent of the super-solution: the root of `gamma sigma(1 + gamma)^2 = 2r`.
///
/// `1 + gamma` is the value of `H = S V''` at the boundary of the Merton
/// solution with exponent `gamma`. The left side increases from zero, so
/// the root is unique and no larger than `gamma_minus`.
pub fn gamma_plus(model: &VolatilityModel, r: f64) -> Result<f64> {
    if !model.s_independent() {
        return Err(Error::NotSIndependent);
    }
    let upper = gamma_minus(model, r)?;
    let f = |g: f64| Ok(g * model.variance_sq(1.0, 1.0 + g)? - 2.0 * r);
    let tol = ToleranceSpec::new(1e-14, 0.0, 200)?;
    let bracket = Bracket::new(1e-10, upper).map_err(|e| Error::NoRoot(e.to_string()))?;
    find_root(f, bracket, &tol).map_err(|e| match e {
        Error::NoSignChange { .. } => Error::NoRoot(format!("gamma_plus: {e}")),
        other => other,
    })
}

/// `(rho_plus, rho_minus)`: the free boundary lies between the boundaries
/// of the super- and sub-solutions.
pub fn bounds_interval(model: &VolatilityModel, r: f64, strike: f64) -> Result<(f64, f64)> {
    let plus = MertonSolution::new(gamma_plus(model, r)?, strike)?;
    let minus = MertonSolution::new(gamma_minus(model, r)?, strike)?;
    Ok((plus.boundary, minus.boundary))
}

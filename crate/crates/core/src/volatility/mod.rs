//! Volatility models `sigma = sigma(S, H)` with `H = S d^2V/dS^2`.
//!
//! Every model is bounded below by `sigma0 > 0` and nondecreasing in
//! `H > 0`; for `H <= 0` the volatility is frozen at its `H = 0` value. This
//! makes `H -> sigma(S, H)^2 H / 2` strictly increasing on the whole line, so
//! its inverse [`VolatilityModel::beta`] is well defined.

mod psi;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use psi::{psi_derivative, PsiTable};

use crate::error::{Error, Result};
use crate::numerics::{find_root, Bracket, ToleranceSpec};

const BETA_TOL: ToleranceSpec = ToleranceSpec {
    rel_tol: 4.0 * f64::EPSILON,
    abs_tol: 0.0,
    max_iter: 200,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    Constant,
    Rapm,
    #[serde(alias = "barles-soner")]
    BarlesSoner,
}

/// Serializable description of a model, e.g.
/// `{"variant": "rapm", "sigma0": 0.3, "lambda": 1.0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: ModelVariant,
    pub sigma0: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub a: f64,
}

#[derive(Debug, Clone)]
pub enum VolatilityModel {
    /// `sigma^2 = sigma0^2`
    Constant { sigma0: f64 },
    /// Risk adjusted pricing: `sigma^2 = sigma0^2 (1 + lambda H^(1/3))`.
    Rapm { sigma0: f64, lambda: f64 },
    /// Exponential-utility model: `sigma^2 = sigma0^2 (1 + Psi(a^2 S H))`.
    BarlesSoner { sigma0: f64, a: f64, psi: Arc<PsiTable> },
}

fn check_sigma0(sigma0: f64) -> Result<()> {
    if sigma0 > 0.0 && sigma0.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("sigma0 must be positive, got {sigma0}")))
    }
}

fn check_nonnegative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{name} must be non-negative, got {v}")))
    }
}

impl VolatilityModel {
    pub fn constant(sigma0: f64) -> Result<Self> {
        check_sigma0(sigma0)?;
        Ok(Self::Constant { sigma0 })
    }

    pub fn rapm(sigma0: f64, lambda: f64) -> Result<Self> {
        check_sigma0(sigma0)?;
        check_nonnegative("lambda", lambda)?;
        Ok(Self::Rapm { sigma0, lambda })
    }

    /// Builds the Psi table; use [`Self::barles_soner_with_table`] to share one.
    pub fn barles_soner(sigma0: f64, a: f64) -> Result<Self> {
        Self::barles_soner_with_table(sigma0, a, Arc::new(PsiTable::build()?))
    }

    pub fn barles_soner_with_table(sigma0: f64, a: f64, psi: Arc<PsiTable>) -> Result<Self> {
        check_sigma0(sigma0)?;
        check_nonnegative("a", a)?;
        Ok(Self::BarlesSoner { sigma0, a, psi })
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        match spec.variant {
            ModelVariant::Constant => Self::constant(spec.sigma0),
            ModelVariant::Rapm => Self::rapm(spec.sigma0, spec.lambda),
            ModelVariant::BarlesSoner => Self::barles_soner(spec.sigma0, spec.a),
        }
    }

    pub fn spec(&self) -> ModelSpec {
        match *self {
            Self::Constant { sigma0 } => ModelSpec {
                variant: ModelVariant::Constant,
                sigma0,
                lambda: 0.0,
                a: 0.0,
            },
            Self::Rapm { sigma0, lambda } => ModelSpec {
                variant: ModelVariant::Rapm,
                sigma0,
                lambda,
                a: 0.0,
            },
            Self::BarlesSoner { sigma0, a, .. } => ModelSpec {
                variant: ModelVariant::BarlesSoner,
                sigma0,
                lambda: 0.0,
                a,
            },
        }
    }

    pub fn sigma0(&self) -> f64 {
        match *self {
            Self::Constant { sigma0 } | Self::Rapm { sigma0, .. } | Self::BarlesSoner { sigma0, .. } => sigma0,
        }
    }

    /// True when the volatility depends on `H` only.
    pub fn s_independent(&self) -> bool {
        !matches!(self, Self::BarlesSoner { .. })
    }

    /// `sigma(S, H)^2`.
    pub fn variance_sq(&self, s: f64, h: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::NonPositiveAsset(s));
        }
        let h = h.max(0.0);
        Ok(match self {
            Self::Constant { sigma0 } => sigma0 * sigma0,
            Self::Rapm { sigma0, lambda } => sigma0 * sigma0 * (1.0 + lambda * h.cbrt()),
            Self::BarlesSoner { sigma0, a, psi } => sigma0 * sigma0 * (1.0 + psi.eval(a * a * s * h)?),
        })
    }

    /// `w = sigma(S, H)^2 H / 2`.
    pub fn half_sigma_sq_h(&self, s: f64, h: f64) -> Result<f64> {
        Ok(0.5 * self.variance_sq(s, h)? * h)
    }

    /// `d/dH (sigma(S, H)^2 H)` for `H > 0`.
    pub fn d_variance_h(&self, s: f64, h: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::NonPositiveAsset(s));
        }
        if !(h > 0.0) {
            return Err(Error::NonPositiveGamma(h));
        }
        match self {
            Self::Constant { sigma0 } => Ok(sigma0 * sigma0),
            Self::Rapm { sigma0, lambda } => Ok(sigma0 * sigma0 * (1.0 + 4.0 / 3.0 * lambda * h.cbrt())),
            Self::BarlesSoner { .. } => {
                let step = (1e-6 * h).max(1e-12);
                let up = self.variance_sq(s, h + step)? * (h + step);
                let down = self.variance_sq(s, h - step)? * (h - step);
                Ok((up - down) / (2.0 * step))
            }
        }
    }

    /// Inverse of `H -> sigma(e^x, H)^2 H / 2`: the `H` with
    /// `sigma(e^x, H)^2 H / 2 = w`.
    ///
    /// For `w > 0` the root lies in `[0, 2w / sigma0^2]`; for `w <= 0` the
    /// frozen-volatility branch is linear.
    pub fn beta(&self, x: f64, w: f64) -> Result<f64> {
        let s = x.exp();
        let sigma0 = self.sigma0();
        if w.is_nan() {
            return Err(Error::InversionFailed { w });
        }
        if w <= 0.0 {
            return Ok(2.0 * w / self.variance_sq(s, 0.0)?);
        }
        let upper = 2.0 * w / (sigma0 * sigma0);
        match self {
            Self::Constant { .. } => Ok(upper),
            Self::Rapm { lambda, .. } if *lambda == 0.0 => Ok(upper),
            Self::BarlesSoner { a, .. } if *a == 0.0 => Ok(upper),
            _ => {
                let f = |h: f64| Ok(self.half_sigma_sq_h(s, h)? - w);
                let bracket = Bracket::new(0.0, upper).map_err(|_| Error::InversionFailed { w })?;
                find_root(f, bracket, &BETA_TOL).map_err(|e| match e {
                    Error::NoSignChange { .. } | Error::MaxIterExceeded(_) | Error::NonFinite { .. } => {
                        Error::InversionFailed { w }
                    }
                    other => other,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn variance_examples() {
        let c = VolatilityModel::constant(0.3).unwrap();
        assert!(close(c.variance_sq(42.0, 7.0).unwrap(), 0.09, 1e-15));
        let r = VolatilityModel::rapm(0.3, 1.0).unwrap();
        assert!(close(r.variance_sq(100.0, 1.0).unwrap(), 0.18, 1e-15));
        let bs = VolatilityModel::barles_soner(0.3, 0.05).unwrap();
        assert!(close(bs.variance_sq(100.0, 0.0).unwrap(), 0.09, 1e-15));
        assert_eq!(c.variance_sq(0.0, 1.0), Err(Error::NonPositiveAsset(0.0)));
    }

    #[test]
    fn negative_h_uses_zero_value() {
        let r = VolatilityModel::rapm(0.3, 2.0).unwrap();
        assert_eq!(r.variance_sq(1.0, -5.0).unwrap(), r.variance_sq(1.0, 0.0).unwrap());
        let bs = VolatilityModel::barles_soner(0.3, 0.1).unwrap();
        assert_eq!(bs.variance_sq(80.0, -1.0).unwrap(), 0.09);
    }

    #[test]
    fn half_sigma_sq_examples() {
        let c = VolatilityModel::constant(0.3).unwrap();
        assert!(close(c.half_sigma_sq_h(1.0, 2.0).unwrap(), 0.09, 1e-15));
        let r = VolatilityModel::rapm(0.3, 1.0).unwrap();
        assert!(close(r.half_sigma_sq_h(1.0, 1.0).unwrap(), 0.09, 1e-15));
        for m in [c, r] {
            assert_eq!(m.half_sigma_sq_h(3.0, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn d_variance_examples() {
        let c = VolatilityModel::constant(0.3).unwrap();
        assert!(close(c.d_variance_h(1.0, 17.0).unwrap(), 0.09, 1e-15));
        let r = VolatilityModel::rapm(0.3, 1.0).unwrap();
        assert!(close(r.d_variance_h(1.0, 1.0).unwrap(), 0.21, 1e-14));
        let r0 = VolatilityModel::rapm(0.3, 0.0).unwrap();
        assert!(close(r0.d_variance_h(1.0, 5.0).unwrap(), 0.09, 1e-15));
        assert_eq!(c.d_variance_h(1.0, 0.0), Err(Error::NonPositiveGamma(0.0)));
    }

    #[test]
    fn d_variance_matches_finite_differences() {
        let r = VolatilityModel::rapm(0.3, 1.7).unwrap();
        for h in [0.01, 0.5, 1.0, 4.0, 30.0] {
            let step = 1e-5 * h;
            let g = |h: f64| r.variance_sq(1.0, h).unwrap() * h;
            let fd = (g(h + step) - g(h - step)) / (2.0 * step);
            assert!(close(r.d_variance_h(1.0, h).unwrap(), fd, 1e-8), "H = {h}");
        }
        // Barles-Soner against the derivative carried by the Psi equation
        let bs = VolatilityModel::barles_soner(0.3, 0.05).unwrap();
        if let VolatilityModel::BarlesSoner { ref psi, .. } = bs {
            for (s, h) in [(50.0, 0.3), (100.0, 1.5), (200.0, 4.0)] {
                let u = 0.05f64.powi(2) * s * h;
                let p = psi.eval(u).unwrap();
                let exact = 0.09 * (1.0 + p) + 0.09 * psi_derivative(u, p) * u;
                assert!(close(bs.d_variance_h(s, h).unwrap(), exact, 1e-6), "S = {s}, H = {h}");
            }
        }
    }

    #[test]
    fn beta_examples() {
        let c = VolatilityModel::constant(0.3).unwrap();
        assert!(close(c.beta(0.0, 0.1).unwrap(), 0.2 / 0.09, 1e-15));
        let r = VolatilityModel::rapm(0.3, 1.0).unwrap();
        let bs = VolatilityModel::barles_soner(0.3, 0.05).unwrap();
        for m in [&c, &r, &bs] {
            assert_eq!(m.beta(1.3, 0.0).unwrap(), 0.0);
            assert!(close(m.beta(1.3, -0.2).unwrap(), -0.4 / 0.09, 1e-15));
        }
        // 40-digit root of 0.045 (1 + H^(1/3)) H = 0.1
        assert!(close(r.beta(0.0, 0.1).unwrap(), 1.094_406_419_228_817, 1e-13));
    }

    #[test]
    fn beta_matches_bisection_oracle() {
        let r = VolatilityModel::rapm(0.3, 1.0).unwrap();
        let (mut lo, mut hi) = (0.0f64, 0.2 / 0.09);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 0.045 * (1.0 + mid.cbrt()) * mid < 0.1 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!(close(r.beta(0.0, 0.1).unwrap(), 0.5 * (lo + hi), 1e-13));
    }

    #[test]
    fn zero_parameter_models_reduce_to_constant() {
        let c = VolatilityModel::constant(0.25).unwrap();
        let r = VolatilityModel::rapm(0.25, 0.0).unwrap();
        let bs = VolatilityModel::barles_soner(0.25, 0.0).unwrap();
        for (s, h) in [(1.0, 0.5), (90.0, 3.0), (1e3, 1e-4)] {
            let v = c.variance_sq(s, h).unwrap();
            assert_eq!(r.variance_sq(s, h).unwrap(), v);
            assert_eq!(bs.variance_sq(s, h).unwrap(), v);
            assert_eq!(r.d_variance_h(s, h).unwrap(), c.d_variance_h(s, h).unwrap());
        }
        for w in [1e-6, 0.3, 40.0] {
            assert_eq!(r.beta(2.0, w).unwrap(), c.beta(2.0, w).unwrap());
            assert_eq!(bs.beta(2.0, w).unwrap(), c.beta(2.0, w).unwrap());
        }
    }

    #[test]
    fn s_independence_flags() {
        assert!(VolatilityModel::constant(0.3).unwrap().s_independent());
        assert!(VolatilityModel::rapm(0.3, 1.0).unwrap().s_independent());
        assert!(!VolatilityModel::barles_soner(0.3, 0.1).unwrap().s_independent());
    }

    #[test]
    fn invalid_parameters() {
        assert!(VolatilityModel::constant(0.0).is_err());
        assert!(VolatilityModel::rapm(0.3, -1.0).is_err());
        assert!(VolatilityModel::rapm(f64::NAN, 1.0).is_err());
        assert!(VolatilityModel::barles_soner(0.3, -0.1).is_err());
    }

    #[test]
    fn spec_round_trip_through_json() {
        let json = r#"{"variant": "rapm", "sigma0": 0.3, "lambda": 1.2}"#;
        let spec: ModelSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.a, 0.0);
        let model = VolatilityModel::from_spec(&spec).unwrap();
        assert_eq!(model.spec(), spec);
        let bs: ModelSpec = serde_json::from_str(r#"{"variant": "barles-soner", "sigma0": 0.2, "a": 0.05}"#).unwrap();
        assert_eq!(bs.variant, ModelVariant::BarlesSoner);
    }
}

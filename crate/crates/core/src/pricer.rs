//! Option value and Greeks from a solved free boundary.
//!
//! Above the boundary `V(S) = (S/r) int_{ln S}^inf W(x) dx`, from which
//! `V'(S) = V/S - W(ln S)/r` and `S V''(S) = beta(ln S, W(ln S))` follow
//! without numerical differentiation. Below it the put is exercised.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::merton::{gamma_minus, gamma_plus, MertonSolution};
use crate::numerics::{find_root, integrate_adaptive, Bracket};
use crate::solver::{h_density, integrate_w_tail, w_at, FreeBoundarySolution, MarketParams, SolverConfig};
use crate::volatility::VolatilityModel;

/// Value and derivatives at one asset price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointValue {
    pub s: f64,
    pub v: f64,
    pub delta: f64,
    /// `H = S V''`
    pub h: f64,
    /// `W(ln S)`; zero in the exercise region.
    pub w: f64,
}

/// The continuation formula at `s >= rho`, including `s = rho` itself.
pub fn continuation(
    model: &VolatilityModel,
    params: &MarketParams,
    sol: &FreeBoundarySolution,
    s: f64,
    cfg: &SolverConfig,
) -> Result<PointValue> {
    if !(s > 0.0) {
        return Err(Error::NonPositiveAsset(s));
    }
    let x = s.ln();
    if x < sol.x0 {
        return Err(Error::InvalidParams(format!(
            "S = {s} lies in the exercise region below rho = {}",
            sol.rho
        )));
    }
    let w = w_at(model, params, sol.x0, x, cfg)?;
    let int_w = integrate_w_tail(model, params, x, w, cfg)?.integral_w();
    let v = s / params.r * int_w;
    Ok(PointValue {
        s,
        v,
        delta: int_w / params.r - w / params.r,
        h: model.beta(x, w)?,
        w,
    })
}

/// Value and derivatives, intrinsic in the exercise region `S <= rho`.
pub fn evaluate(
    model: &VolatilityModel,
    params: &MarketParams,
    sol: &FreeBoundarySolution,
    s: f64,
    cfg: &SolverConfig,
) -> Result<PointValue> {
    if !(s > 0.0) {
        return Err(Error::NonPositiveAsset(s));
    }
    if s < sol.rho {
        return Ok(PointValue {
            s,
            v: params.strike - s,
            delta: -1.0,
            h: 0.0,
            w: 0.0,
        });
    }
    if s == sol.rho {
        // value matching and smooth pasting hold exactly; H is the limit from above
        let w = params.w_start(sol.x0);
        return Ok(PointValue {
            s,
            v: params.strike - s,
            delta: -1.0,
            h: model.beta(sol.x0, w)?,
            w,
        });
    }
    continuation(model, params, sol, s, cfg)
}

pub fn price(
    model: &VolatilityModel,
    params: &MarketParams,
    sol: &FreeBoundarySolution,
    s: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    Ok(evaluate(model, params, sol, s, cfg)?.v)
}

pub fn delta(
    model: &VolatilityModel,
    params: &MarketParams,
    sol: &FreeBoundarySolution,
    s: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    Ok(evaluate(model, params, sol, s, cfg)?.delta)
}

/// `H = S V''(S)`.
pub fn gamma_h(
    model: &VolatilityModel,
    params: &MarketParams,
    sol: &FreeBoundarySolution,
    s: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    Ok(evaluate(model, params, sol, s, cfg)?.h)
}

/// `sigma(S,H)^2 S^2 V''/2 + r S V' - r V` for an evaluated point.
pub fn residual_of(model: &VolatilityModel, params: &MarketParams, p: &PointValue) -> Result<f64> {
    let r = params.r;
    Ok(p.s * model.half_sigma_sq_h(p.s, p.h)? + r * p.s * p.delta - r * p.v)
}

/// Stationary equation residual at `S`.
///
/// In the exercise region the intrinsic value gives `-rE`: the equation
/// only holds above the boundary.
pub fn residual(
    model: &VolatilityModel,
    params: &MarketParams,
    sol: &FreeBoundarySolution,
    s: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    residual_of(model, params, &evaluate(model, params, sol, s, cfg)?)
}

/// Value from quadratures in `H` only.
///
/// `H(S)` solves `int_{H(S)}^{H0} h_density(h) dh / h = ln(S / rho)` with
/// `H0 = beta(rE / rho)`, and then
/// `V(S) = (S/r) int_0^{H(S)} (sigma^2/2) h_density(H) dH`.
pub fn price_h_form(
    model: &VolatilityModel,
    params: &MarketParams,
    rho: f64,
    s: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    if !model.s_independent() {
        return Err(Error::NotSIndependent);
    }
    params.validate()?;
    if !(rho > 0.0) || s < rho {
        return Err(Error::InvalidParams(format!(
            "price_h_form needs 0 < rho <= S, got rho = {rho}, S = {s}"
        )));
    }
    let r = params.r;
    let h0 = model.beta(0.0, r * params.strike / rho)?;
    let distance = (s / rho).ln();
    let h_s = if distance == 0.0 {
        h0
    } else {
        let log_h0 = h0.ln();
        // log-distance over [ln h, ln h0]; h_density >= 1 / (1 + gamma-)
        let log_distance = |log_h: f64| -> Result<f64> {
            let q = integrate_adaptive(|t| h_density(model, r, t.exp()), log_h, log_h0, &cfg.tol_quad)?;
            Ok(q.value - distance)
        };
        let span = (1.0 + gamma_minus(model, r)?) * distance * (1.0 + cfg.bracket_margin) + cfg.bracket_margin;
        let bracket = Bracket::new(log_h0 - span, log_h0)?;
        let log_h = find_root(log_distance, bracket, &cfg.tol_quad).map_err(|e| match e {
            Error::NoSignChange { .. } => Error::NoRoot(format!("H(S) for S = {s}: {e}")),
            other => other,
        })?;
        log_h.exp()
    };

    let q = integrate_adaptive(
        |v| {
            let h = v * v * v;
            if h <= 0.0 {
                return Ok(0.0);
            }
            Ok(3.0 * v * v * 0.5 * model.variance_sq(1.0, h)? * h_density(model, r, h)?)
        },
        0.0,
        h_s.cbrt(),
        &cfg.tol_quad,
    )?;
    Ok(s / r * q.value)
}

/// One row of a price curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub s: f64,
    pub v: f64,
    pub delta: f64,
    pub h: f64,
    pub residual: f64,
    /// Sub-solution `V_{gamma-}(S)`.
    pub v_sub: Option<f64>,
    /// Super-solution `V_{gamma+}(S)`.
    pub v_super: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceCurve {
    pub rho: f64,
    pub strike: f64,
    pub points: Vec<CurvePoint>,
}

/// Evaluates the solution on `s_grid` (sorted, positive). For `sigma = sigma(H)`
/// models the Merton sub- and super-solutions are attached.
pub fn build_curve(
    model: &VolatilityModel,
    params: &MarketParams,
    sol: &FreeBoundarySolution,
    s_grid: &[f64],
    cfg: &SolverConfig,
) -> Result<PriceCurve> {
    if s_grid.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidParams("asset grid must be positive".into()));
    }
    if s_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParams("asset grid must be sorted".into()));
    }
    let envelopes = if model.s_independent() {
        Some((
            MertonSolution::new(gamma_minus(model, params.r)?, params.strike)?,
            MertonSolution::new(gamma_plus(model, params.r)?, params.strike)?,
        ))
    } else {
        None
    };
    let points = s_grid
        .iter()
        .map(|&s| {
            let p = evaluate(model, params, sol, s, cfg)?;
            Ok(CurvePoint {
                s,
                v: p.v,
                delta: p.delta,
                h: p.h,
                residual: residual_of(model, params, &p)?,
                v_sub: envelopes.map(|(sub, _)| sub.price(s)),
                v_super: envelopes.map(|(_, sup)| sup.price(s)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PriceCurve {
        rho: sol.rho,
        strike: params.strike,
        points,
    })
}

/// `n` points from `s_min` to `s_max`, evenly spaced in `S` or in `ln S`.
pub fn asset_grid(s_min: f64, s_max: f64, n: usize, log_spacing: bool) -> Result<Vec<f64>> {
    if !(s_min > 0.0 && s_max.is_finite() && s_min <= s_max) {
        return Err(Error::InvalidParams(format!("invalid grid [{s_min}, {s_max}]")));
    }
    if n == 0 {
        return Err(Error::InvalidParams("grid needs at least one point".into()));
    }
    if n == 1 {
        return Ok(vec![s_min]);
    }
    let last = (n - 1) as f64;
    Ok((0..n)
        .map(|i| {
            let t = i as f64 / last;
            if i == n - 1 {
                s_max
            } else if log_spacing {
                (s_min.ln() + t * (s_max / s_min).ln()).exp()
            } else {
                s_min + t * (s_max - s_min)
            }
        })
        .collect())
}

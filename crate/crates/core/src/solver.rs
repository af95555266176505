//! Free boundary of the perpetual put.
//!
//! With `x = ln S` and `W(x) = (r/S)(V - S V')`, the stationary equation
//! becomes the first-order problem
//!
//! ```text
//! W'(x) = -W(x) - r beta(x, W(x)),   W(x0) = r E e^{-x0},
//! ```
//!
//! and the boundary `rho = e^{x0}` is the unique `x0` with
//! `phi(x0) = int_{x0}^inf beta(x, W(x)) dx = 1`. `phi` is strictly
//! decreasing, which every bracketing strategy below relies on.
//!
//! When the volatility depends on `H` only, the same condition reduces to a
//! single quadrature either in the `w` variable or, after `w = sigma(H)^2 H / 2`,
//! in `H` itself; the latter needs no inversion of `beta` at all.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::merton::{bounds_interval, gamma_minus, MertonSolution};
use crate::numerics::{find_root, integrate_adaptive, integrate_ode, Bracket, OdeOptions, Stop, ToleranceSpec};
use crate::volatility::VolatilityModel;

const MAX_EXPANSIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Risk-free rate per year.
    pub r: f64,
    /// Strike `E`.
    pub strike: f64,
}

impl MarketParams {
    pub fn new(r: f64, strike: f64) -> Result<Self> {
        let p = Self { r, strike };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::InvalidParams(format!("r must be positive, got {}", self.r)));
        }
        if !(self.strike > 0.0 && self.strike.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "strike must be positive, got {}",
                self.strike
            )));
        }
        Ok(())
    }

    /// `W` at the boundary candidate `x0`: `r E e^{-x0}`.
    pub fn w_start(&self, x0: f64) -> f64 {
        self.r * self.strike * (-x0).exp()
    }
}

impl Default for MarketParams {
    fn default() -> Self {
        Self { r: 0.1, strike: 100.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Tolerance on the boundary (`x0`, `u = rE/rho` or `H*`).
    pub tol_root: ToleranceSpec,
    pub tol_ode: ToleranceSpec,
    pub tol_quad: ToleranceSpec,
    /// Trajectories stop once `W` falls below this fraction of its starting value.
    pub tail_cutoff: f64,
    /// Hard cap on `x - x_start` for any trajectory.
    pub x_horizon: f64,
    /// Relative widening applied to analytic brackets.
    pub bracket_margin: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::with_root_tol(1e-10)
    }
}

impl SolverConfig {
    /// Root tolerance `rel`; ODE and quadrature run 100x tighter.
    pub fn with_root_tol(rel: f64) -> Self {
        let inner = rel / 100.0;
        Self {
            tol_root: ToleranceSpec {
                rel_tol: rel,
                abs_tol: 1e-12,
                max_iter: 200,
            },
            tol_ode: ToleranceSpec {
                rel_tol: inner,
                abs_tol: 0.0,
                max_iter: 1_000_000,
            },
            tol_quad: ToleranceSpec {
                rel_tol: inner,
                abs_tol: 0.0,
                max_iter: 4000,
            },
            tail_cutoff: 1e-12,
            x_horizon: 200.0,
            bracket_margin: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.tol_root.validate()?;
        self.tol_ode.validate()?;
        self.tol_quad.validate()?;
        for (name, v) in [
            ("tail_cutoff", self.tail_cutoff),
            ("x_horizon", self.x_horizon),
            ("bracket_margin", self.bracket_margin),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    fn ode_options(&self) -> OdeOptions {
        OdeOptions::new(self.tol_ode)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Root of `phi(x0) = 1` with `phi` from the W-ODE.
    #[serde(rename = "general")]
    GeneralOde,
    /// Quadrature in `w` using `beta(w)`.
    #[serde(rename = "w-quad")]
    WQuadrature,
    /// Quadrature in `H`, free of `beta` inversion.
    #[serde(rename = "h-quad")]
    HQuadrature,
}

impl Method {
    /// H-quadrature when the volatility depends on `H` only, otherwise the ODE path.
    pub fn auto_for(model: &VolatilityModel) -> Self {
        if model.s_independent() {
            Method::HQuadrature
        } else {
            Method::GeneralOde
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::GeneralOde => "general",
            Method::WQuadrature => "w-quad",
            Method::HQuadrature => "h-quad",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub x: f64,
    pub w: f64,
    /// `int_{x_start}^x W`
    pub int_w: f64,
    /// `int_{x_start}^x beta(., W)`
    pub int_beta: f64,
}

/// Sampled `W` from some starting abscissa until it has decayed below the
/// tail cutoff, with two-sided bounds on the neglected tails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WTrajectory {
    pub points: Vec<TrajectoryPoint>,
    /// Bounds on `int_{x_end}^inf W`.
    pub tail_w: (f64, f64),
    /// Bounds on `int_{x_end}^inf beta`.
    pub tail_beta: (f64, f64),
}

impl WTrajectory {
    pub fn start(&self) -> &TrajectoryPoint {
        &self.points[0]
    }

    pub fn end(&self) -> &TrajectoryPoint {
        &self.points[self.points.len() - 1]
    }

    /// `int_{x_start}^inf W`, tail closed at the midpoint of its bounds.
    pub fn integral_w(&self) -> f64 {
        self.end().int_w + 0.5 * (self.tail_w.0 + self.tail_w.1)
    }

    /// `int_{x_start}^inf beta(x, W(x)) dx`.
    pub fn integral_beta(&self) -> f64 {
        self.end().int_beta + 0.5 * (self.tail_beta.0 + self.tail_beta.1)
    }

    /// Half-width of the tail uncertainty in [`Self::integral_beta`].
    pub fn beta_tail_halfwidth(&self) -> f64 {
        0.5 * (self.tail_beta.1 - self.tail_beta.0)
    }
}

/// Integrates `(W, int W, int beta)` from `(x_start, w_start)` until `W`
/// drops below `tail_cutoff * w_start`.
pub fn integrate_w_tail(
    model: &VolatilityModel,
    params: &MarketParams,
    x_start: f64,
    w_start: f64,
    cfg: &SolverConfig,
) -> Result<WTrajectory> {
    let r = params.r;
    let cutoff = cfg.tail_cutoff * w_start;
    let below = move |_: f64, y: &[f64]| y[0] < cutoff;
    let traj = integrate_ode(
        |x, y, dy| {
            let beta = model.beta(x, y[0])?;
            dy[0] = -y[0] - r * beta;
            dy[1] = y[0];
            dy[2] = beta;
            Ok(())
        },
        x_start,
        &[w_start, 0.0, 0.0],
        Stop::When {
            predicate: &below,
            horizon: cfg.x_horizon,
        },
        &cfg.ode_options(),
    )?;

    let points: Vec<TrajectoryPoint> = traj
        .xs
        .iter()
        .zip(&traj.states)
        .map(|(&x, s)| TrajectoryPoint {
            x,
            w: s[0],
            int_w: s[1],
            int_beta: s[2],
        })
        .collect();
    let w_end = points[points.len() - 1].w.max(0.0);
    let sigma0 = model.sigma0();
    let fastest = 1.0 + gamma_minus(model, r)?;
    Ok(WTrajectory {
        points,
        // e^{-(1+gamma-)(x-x_end)} <= W / W_end <= e^{-(x-x_end)}
        tail_w: (w_end / fastest, w_end),
        // 0 <= beta(w) <= 2w / sigma0^2
        tail_beta: (0.0, 2.0 * w_end / (sigma0 * sigma0)),
    })
}

/// Trajectory of `W_{x0}` from the boundary candidate `x0`.
pub fn solve_w(model: &VolatilityModel, params: &MarketParams, x0: f64, cfg: &SolverConfig) -> Result<WTrajectory> {
    params.validate()?;
    if !x0.is_finite() {
        return Err(Error::InvalidParams(format!("x0 must be finite, got {x0}")));
    }
    integrate_w_tail(model, params, x0, params.w_start(x0), cfg)
}

/// `W_{x0}(x)` for `x >= x0`.
pub fn w_at(model: &VolatilityModel, params: &MarketParams, x0: f64, x: f64, cfg: &SolverConfig) -> Result<f64> {
    if x < x0 {
        return Err(Error::InvalidParams(format!("x = {x} lies below x0 = {x0}")));
    }
    let r = params.r;
    let traj = integrate_ode(
        |x, y, dy| {
            dy[0] = -y[0] - r * model.beta(x, y[0])?;
            Ok(())
        },
        x0,
        &[params.w_start(x0)],
        Stop::At(x),
        &cfg.ode_options(),
    )?;
    Ok(traj.last().1[0])
}

/// `phi(x0) = int_{x0}^inf beta(x, W_{x0}(x)) dx`.
pub fn phi(model: &VolatilityModel, params: &MarketParams, x0: f64, cfg: &SolverConfig) -> Result<f64> {
    Ok(solve_w(model, params, x0, cfg)?.integral_beta())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeBoundarySolution {
    pub rho: f64,
    pub x0: f64,
    pub method: Method,
    /// `|phi(x0) - 1|` re-evaluated on the final trajectory.
    pub phi_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<WTrajectory>,
}

impl FreeBoundarySolution {
    /// Attaches the trajectory and `phi` residual for a boundary found by `method`.
    pub fn at_boundary(
        model: &VolatilityModel,
        params: &MarketParams,
        x0: f64,
        method: Method,
        cfg: &SolverConfig,
    ) -> Result<Self> {
        let traj = solve_w(model, params, x0, cfg)?;
        Ok(Self {
            rho: x0.exp(),
            x0,
            method,
            phi_residual: (traj.integral_beta() - 1.0).abs(),
            trajectory: Some(traj),
        })
    }

    pub fn trajectory(&self) -> Option<&WTrajectory> {
        self.trajectory.as_ref()
    }

    /// Same solution without the sampled trajectory.
    pub fn summary(&self) -> Self {
        Self {
            trajectory: None,
            ..self.clone()
        }
    }
}

fn widen(bracket: (f64, f64), margin: f64) -> (f64, f64) {
    (
        bracket.0 - margin * bracket.0.abs().max(1.0),
        bracket.1 + margin * bracket.1.abs().max(1.0),
    )
}

/// Expands `[lo, hi]` for a decreasing `f` until `f(lo) > 0 > f(hi)`.
fn expand_decreasing<F>(mut f: F, mut lo: f64, mut hi: f64) -> Result<Bracket>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut width = (hi - lo).max(1e-3);
    let mut expansions = 0;
    while f(lo)? <= 0.0 {
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(Error::BracketExpansionFailed(MAX_EXPANSIONS));
        }
        hi = lo;
        lo -= width;
        width *= 2.0;
    }
    let mut width = (hi - lo).max(1e-3);
    while f(hi)? >= 0.0 {
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(Error::BracketExpansionFailed(MAX_EXPANSIONS));
        }
        lo = hi;
        hi += width;
        width *= 2.0;
    }
    Bracket::new(lo, hi)
}

/// Initial `x0` bracket: the Merton bounds for `sigma = sigma(H)` models,
/// otherwise one unit below the sub-solution boundary.
fn initial_x0_bracket(model: &VolatilityModel, params: &MarketParams, cfg: &SolverConfig) -> Result<(f64, f64)> {
    if model.s_independent() {
        let (rho_plus, rho_minus) = bounds_interval(model, params.r, params.strike)?;
        Ok(widen((rho_plus.ln(), rho_minus.ln()), cfg.bracket_margin))
    } else {
        let upper = MertonSolution::new(gamma_minus(model, params.r)?, params.strike)?
            .boundary
            .ln();
        Ok((upper - 1.0, upper))
    }
}

/// Boundary from the W-ODE: root of `phi(x0) = 1`. Works for every model.
pub fn solve_free_boundary_general(
    model: &VolatilityModel,
    params: &MarketParams,
    cfg: &SolverConfig,
) -> Result<FreeBoundarySolution> {
    params.validate()?;
    cfg.validate()?;
    let excess = |x0: f64| Ok(phi(model, params, x0, cfg)? - 1.0);
    let (lo, hi) = initial_x0_bracket(model, params, cfg)?;
    let bracket = expand_decreasing(excess, lo, hi)?;
    let x0 = find_root(excess, bracket, &cfg.tol_root)?;
    FreeBoundarySolution::at_boundary(model, params, x0, Method::GeneralOde, cfg)
}

/// `int_0^u f(w) dw` with `w = v^3`, which smooths `w^(1/3)` behaviour at 0.
fn integrate_cubic<F>(mut f: F, upper: f64, tol: &ToleranceSpec) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let q = integrate_adaptive(
        |v| {
            let w = v * v * v;
            if w <= 0.0 {
                return Ok(0.0);
            }
            Ok(3.0 * v * v * f(w)?)
        },
        0.0,
        upper.cbrt(),
        tol,
    )?;
    Ok(q.value)
}

fn require_s_independent(model: &VolatilityModel) -> Result<()> {
    if model.s_independent() {
        Ok(())
    } else {
        Err(Error::NotSIndependent)
    }
}

/// `G(u) = int_0^u beta(w) / (w + r beta(w)) dw`.
pub fn w_condition(model: &VolatilityModel, params: &MarketParams, u: f64, cfg: &SolverConfig) -> Result<f64> {
    require_s_independent(model)?;
    let r = params.r;
    integrate_cubic(
        |w| {
            let b = model.beta(0.0, w)?;
            Ok(b / (w + r * b))
        },
        u,
        &cfg.tol_quad,
    )
}

fn no_root(stage: &str, e: Error) -> Error {
    match e {
        Error::NoSignChange { .. } | Error::BracketExpansionFailed(_) => Error::NoRoot(format!("{stage}: {e}")),
        other => other,
    }
}

/// Boundary from `G(rE/rho) = 1`.
pub fn solve_free_boundary_w(
    model: &VolatilityModel,
    params: &MarketParams,
    cfg: &SolverConfig,
) -> Result<FreeBoundarySolution> {
    require_s_independent(model)?;
    params.validate()?;
    cfg.validate()?;
    let re = params.r * params.strike;
    let (rho_plus, rho_minus) = bounds_interval(model, params.r, params.strike)?;
    let (lo, hi) = widen((re / rho_minus, re / rho_plus), cfg.bracket_margin);
    let lo = lo.max(0.5 * re / rho_minus);
    let excess = |u: f64| Ok(w_condition(model, params, u, cfg)? - 1.0);
    let bracket = positive_increasing_bracket(excess, lo, hi).map_err(|e| no_root("w-quadrature bracket", e))?;
    let u = find_root(excess, bracket, &cfg.tol_root).map_err(|e| no_root("w-quadrature", e))?;
    FreeBoundarySolution::at_boundary(model, params, (re / u).ln(), Method::WQuadrature, cfg)
}

/// Bracket for an increasing `f` on `(0, inf)`: halves `lo` until `f(lo) < 0`
/// and doubles `hi` until `f(hi) > 0`.
fn positive_increasing_bracket<F>(mut f: F, mut lo: f64, mut hi: f64) -> Result<Bracket>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut expansions = 0;
    while f(lo)? >= 0.0 {
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(Error::BracketExpansionFailed(MAX_EXPANSIONS));
        }
        hi = lo;
        lo *= 0.5;
    }
    while f(hi)? <= 0.0 {
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(Error::BracketExpansionFailed(MAX_EXPANSIONS));
        }
        lo = hi;
        hi *= 2.0;
    }
    Bracket::new(lo, hi)
}

/// Integrand of the H-form boundary condition,
/// `(d/dH (sigma^2 H) / 2) / (sigma^2 / 2 + r)`.
pub fn h_density(model: &VolatilityModel, r: f64, h: f64) -> Result<f64> {
    let half_var = 0.5 * model.variance_sq(1.0, h)?;
    let half_dvar = if h > 0.0 {
        0.5 * model.d_variance_h(1.0, h)?
    } else {
        half_var
    };
    Ok(half_dvar / (half_var + r))
}

/// `I(H) = int_0^H h_density`.
pub fn h_condition(model: &VolatilityModel, params: &MarketParams, h: f64, cfg: &SolverConfig) -> Result<f64> {
    require_s_independent(model)?;
    integrate_cubic(|h| h_density(model, params.r, h), h, &cfg.tol_quad)
}

/// Boundary from `I(H*) = 1` and `rho = rE / (sigma(H*)^2 H* / 2)`.
pub fn solve_free_boundary_h(
    model: &VolatilityModel,
    params: &MarketParams,
    cfg: &SolverConfig,
) -> Result<FreeBoundarySolution> {
    require_s_independent(model)?;
    params.validate()?;
    cfg.validate()?;
    // h_density >= 1 / (1 + gamma-), so I(1 + gamma-) >= 1
    let upper = (1.0 + gamma_minus(model, params.r)?) * (1.0 + cfg.bracket_margin);
    let lower = upper * 1e-3;
    let excess = |h: f64| Ok(h_condition(model, params, h, cfg)? - 1.0);
    let bracket = positive_increasing_bracket(excess, lower, upper).map_err(|e| no_root("H-quadrature bracket", e))?;
    let h_star = find_root(excess, bracket, &cfg.tol_root).map_err(|e| no_root("H-quadrature", e))?;
    let rho = params.r * params.strike / model.half_sigma_sq_h(1.0, h_star)?;
    FreeBoundarySolution::at_boundary(model, params, rho.ln(), Method::HQuadrature, cfg)
}

/// Dispatches on `method`; `None` picks [`Method::auto_for`].
pub fn solve_free_boundary(
    model: &VolatilityModel,
    params: &MarketParams,
    method: Option<Method>,
    cfg: &SolverConfig,
) -> Result<FreeBoundarySolution> {
    match method.unwrap_or_else(|| Method::auto_for(model)) {
        Method::GeneralOde => solve_free_boundary_general(model, params, cfg),
        Method::WQuadrature => solve_free_boundary_w(model, params, cfg),
        Method::HQuadrature => solve_free_boundary_h(model, params, cfg),
    }
}

/// `W_{x0_a}(x_eval)` and `W_{x0_b}(x_eval)` for `x0_a < x0_b <= x_eval`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityWitness {
    pub w_a: f64,
    pub w_b: f64,
}

impl MonotonicityWitness {
    /// `W` increases with the starting point.
    pub fn is_strict(&self) -> bool {
        self.w_b > self.w_a
    }
}

pub fn w_monotonicity_probe(
    model: &VolatilityModel,
    params: &MarketParams,
    x0_a: f64,
    x0_b: f64,
    x_eval: f64,
    cfg: &SolverConfig,
) -> Result<MonotonicityWitness> {
    if !(x0_a < x0_b && x_eval >= x0_b) {
        return Err(Error::InvalidParams(format!(
            "probe needs x0_a < x0_b <= x_eval, got {x0_a}, {x0_b}, {x_eval}"
        )));
    }
    Ok(MonotonicityWitness {
        w_a: w_at(model, params, x0_a, x_eval, cfg)?,
        w_b: w_at(model, params, x0_b, x_eval, cfg)?,
    })
}

//! Perpetual American put under nonlinear volatility models `sigma(S, S V'')`.
//!
//! ```
//! use perpetual_core::{price, solve_free_boundary, MarketParams, SolverConfig, VolatilityModel};
//!
//! let model = VolatilityModel::rapm(0.3, 1.0)?;
//! let params = MarketParams::new(0.1, 100.0)?;
//! let cfg = SolverConfig::default();
//! let sol = solve_free_boundary(&model, &params, None, &cfg)?;
//! let v = price(&model, &params, &sol, 100.0, &cfg)?;
//! assert!(sol.rho > 53.3 && sol.rho < 53.4);
//! assert!(v > 21.3 && v < 21.4);
//! # Ok::<(), perpetual_core::Error>(())
//! ```
// `!(x > 0.0)` guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod merton;
pub mod numerics;
pub mod pricer;
pub mod solver;
pub mod volatility;

pub use error::{Error, Result};
pub use merton::{bounds_interval, gamma_minus, gamma_plus, MertonSolution};
pub use pricer::{build_curve, price, price_h_form, CurvePoint, PriceCurve};
pub use solver::{solve_free_boundary, FreeBoundarySolution, MarketParams, Method, SolverConfig};
pub use volatility::{ModelSpec, ModelVariant, VolatilityModel};

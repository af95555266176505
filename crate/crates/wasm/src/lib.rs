//! Browser bindings. Every export returns a JSON string so the page needs
//! no generated type glue beyond `wasm-bindgen` itself.

use std::sync::{Arc, OnceLock};

use perpetual_core::merton::{bounds_interval, gamma_minus, gamma_plus, MertonSolution};
use perpetual_core::pricer::{asset_grid, build_curve, price};
use perpetual_core::solver::{solve_free_boundary, MarketParams, SolverConfig};
use perpetual_core::volatility::{PsiTable, VolatilityModel};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Looser than the library default; plots need far fewer digits.
const DEMO_TOL: f64 = 1e-8;

fn psi_table() -> Result<Arc<PsiTable>, String> {
    static TABLE: OnceLock<Arc<PsiTable>> = OnceLock::new();
    if let Some(t) = TABLE.get() {
        return Ok(t.clone());
    }
    let t = Arc::new(PsiTable::build().map_err(|e| e.to_string())?);
    Ok(TABLE.get_or_init(|| t).clone())
}

#[derive(Serialize)]
struct CurveRow {
    s: f64,
    v: f64,
    v_sub: f64,
    v_super: f64,
}

#[derive(Serialize)]
struct CurveReport {
    rho: f64,
    rho_plus: f64,
    rho_minus: f64,
    gamma_minus: f64,
    gamma_plus: f64,
    points: Vec<CurveRow>,
}

#[derive(Serialize)]
struct SweepRow {
    value: f64,
    rho: f64,
    v_at_strike: f64,
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// RAPM price curve on `[S_min, s_max]` with the Merton sub- and
/// super-solutions; `S_min` is half the lower Merton boundary.
pub fn rapm_curve_json(lambda: f64, sigma0: f64, r: f64, strike: f64, s_max: f64, n: usize) -> Result<String, String> {
    let model = VolatilityModel::rapm(sigma0, lambda).map_err(|e| e.to_string())?;
    let params = MarketParams::new(r, strike).map_err(|e| e.to_string())?;
    let cfg = SolverConfig::with_root_tol(DEMO_TOL);
    let sol = solve_free_boundary(&model, &params, None, &cfg).map_err(|e| e.to_string())?;
    let (rho_plus, rho_minus) = bounds_interval(&model, r, strike).map_err(|e| e.to_string())?;
    let grid = asset_grid(0.5 * rho_plus, s_max.max(rho_minus), n.max(2), false).map_err(|e| e.to_string())?;
    let curve = build_curve(&model, &params, &sol, &grid, &cfg).map_err(|e| e.to_string())?;
    let points = curve
        .points
        .iter()
        .map(|p| CurveRow {
            s: p.s,
            v: p.v,
            v_sub: p.v_sub.unwrap_or(f64::NAN),
            v_super: p.v_super.unwrap_or(f64::NAN),
        })
        .collect();
    to_json(&CurveReport {
        rho: sol.rho,
        rho_plus,
        rho_minus,
        gamma_minus: gamma_minus(&model, r).map_err(|e| e.to_string())?,
        gamma_plus: gamma_plus(&model, r).map_err(|e| e.to_string())?,
        points,
    })
}

/// Boundary and value at the strike for `n` evenly spaced values of the
/// model parameter on `[0, max]`: `lambda` for `"rapm"`, `a` for `"barles-soner"`.
pub fn boundary_sweep_json(
    model: &str,
    max: f64,
    n: usize,
    sigma0: f64,
    r: f64,
    strike: f64,
) -> Result<String, String> {
    let params = MarketParams::new(r, strike).map_err(|e| e.to_string())?;
    let cfg = SolverConfig::with_root_tol(DEMO_TOL);
    if !(max >= 0.0 && max.is_finite()) {
        return Err(format!("parameter range must be finite and non-negative, got {max}"));
    }
    let n = n.max(2);
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let value = max * i as f64 / (n - 1) as f64;
        let vol = match model {
            "rapm" => VolatilityModel::rapm(sigma0, value),
            "barles-soner" => VolatilityModel::barles_soner_with_table(sigma0, value, psi_table()?),
            other => return Err(format!("unknown model {other:?}")),
        }
        .map_err(|e| e.to_string())?;
        let sol = solve_free_boundary(&vol, &params, None, &cfg).map_err(|e| e.to_string())?;
        let v = price(&vol, &params, &sol, strike, &cfg).map_err(|e| e.to_string())?;
        rows.push(SweepRow {
            value,
            rho: sol.rho,
            v_at_strike: v,
        });
    }
    to_json(&rows)
}

/// Closed-form Merton boundary and value at the strike, for the page's
/// reference line.
pub fn merton_json(sigma0: f64, r: f64, strike: f64) -> Result<String, String> {
    let m = MertonSolution::from_market(r, sigma0, strike).map_err(|e| e.to_string())?;
    to_json(&serde_json::json!({ "rho": m.boundary, "v_at_strike": m.price(strike), "gamma": m.gamma }))
}

#[wasm_bindgen]
pub fn price_curve(lambda: f64, sigma0: f64, r: f64, strike: f64, s_max: f64, n: usize) -> Result<String, JsError> {
    rapm_curve_json(lambda, sigma0, r, strike, s_max, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn boundary_sweep(model: &str, max: f64, n: usize, sigma0: f64, r: f64, strike: f64) -> Result<String, JsError> {
    boundary_sweep_json(model, max, n, sigma0, r, strike).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn merton(sigma0: f64, r: f64, strike: f64) -> Result<String, JsError> {
    merton_json(sigma0, r, strike).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn curve_report() {
        let v: Value = serde_json::from_str(&rapm_curve_json(1.0, 0.3, 0.1, 100.0, 300.0, 50).unwrap()).unwrap();
        let rho = v["rho"].as_f64().unwrap();
        assert!((rho - 53.3234).abs() < 1e-3);
        let points = v["points"].as_array().unwrap();
        assert_eq!(points.len(), 50);
        for p in points {
            let (lo, mid, hi) = (
                p["v_sub"].as_f64().unwrap(),
                p["v"].as_f64().unwrap(),
                p["v_super"].as_f64().unwrap(),
            );
            assert!(lo - 1e-6 <= mid && mid <= hi + 1e-6);
        }
    }

    #[test]
    fn sweeps_decrease() {
        for model in ["rapm", "barles-soner"] {
            let rows: Vec<Value> =
                serde_json::from_str(&boundary_sweep_json(model, 0.1, 4, 0.3, 0.1, 100.0).unwrap()).unwrap();
            let rhos: Vec<f64> = rows.iter().map(|r| r["rho"].as_f64().unwrap()).collect();
            assert!((rhos[0] - 68.9655).abs() < 1e-3);
            assert!(rhos.windows(2).all(|w| w[1] < w[0]), "{model}: {rhos:?}");
        }
        assert!(boundary_sweep_json("leland", 1.0, 3, 0.3, 0.1, 100.0).is_err());
    }

    #[test]
    fn merton_reference() {
        let v: Value = serde_json::from_str(&merton_json(0.3, 0.1, 100.0).unwrap()).unwrap();
        assert!((v["rho"].as_f64().unwrap() - 68.9655).abs() < 1e-4);
        assert!(merton_json(0.0, 0.1, 100.0).is_err());
    }
}

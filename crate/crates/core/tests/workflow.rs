//! Public API end to end: specify, solve, price, serialize.

use perpetual_core::pricer::{asset_grid, build_curve, evaluate};
use perpetual_core::{
    solve_free_boundary, FreeBoundarySolution, MarketParams, Method, ModelSpec, SolverConfig, VolatilityModel,
};

#[test]
fn spec_to_curve() {
    let spec: ModelSpec = serde_json::from_str(r#"{"variant": "rapm", "sigma0": 0.3, "lambda": 1.0}"#).unwrap();
    let model = VolatilityModel::from_spec(&spec).unwrap();
    let params = MarketParams::default();
    let cfg = SolverConfig::default();
    let sol = solve_free_boundary(&model, &params, None, &cfg).unwrap();
    assert_eq!(sol.method, Method::HQuadrature);
    assert!((sol.rho - 53.323_396_627).abs() < 1e-7);

    let grid = asset_grid(40.0, 400.0, 25, true).unwrap();
    let curve = build_curve(&model, &params, &sol, &grid, &cfg).unwrap();
    let below: Vec<_> = curve.points.iter().filter(|p| p.s < sol.rho).collect();
    assert!(!below.is_empty());
    assert!(below.iter().all(|p| p.v == 100.0 - p.s && p.delta == -1.0));

    let json = serde_json::to_string(&curve).unwrap();
    let back: perpetual_core::PriceCurve = serde_json::from_str(&json).unwrap();
    assert_eq!(back, curve);
}

#[test]
fn solution_serialization() {
    let model = VolatilityModel::constant(0.3).unwrap();
    let sol = solve_free_boundary(&model, &MarketParams::default(), None, &SolverConfig::default()).unwrap();
    let summary = serde_json::to_value(sol.summary()).unwrap();
    assert_eq!(summary["method"], "h-quad");
    assert!(summary.get("trajectory").is_none());
    let full: FreeBoundarySolution = serde_json::from_str(&serde_json::to_string(&sol).unwrap()).unwrap();
    assert_eq!(
        full.trajectory().unwrap().points.len(),
        sol.trajectory().unwrap().points.len()
    );
}

#[test]
fn looser_tolerance_still_accurate() {
    let model = VolatilityModel::rapm(0.3, 0.6).unwrap();
    let params = MarketParams::default();
    let cfg = SolverConfig::with_root_tol(1e-6);
    for method in [Method::GeneralOde, Method::WQuadrature, Method::HQuadrature] {
        let sol = solve_free_boundary(&model, &params, Some(method), &cfg).unwrap();
        assert!((sol.rho / 58.258_040_756_9 - 1.0).abs() < 1e-5, "{method:?}");
        let p = evaluate(&model, &params, &sol, 100.0, &cfg).unwrap();
        assert!((p.v - 18.677_369_990_9).abs() < 1e-3);
    }
}

#[test]
fn other_market_parameters() {
    // boundary and price scale linearly with the strike
    let model = VolatilityModel::rapm(0.25, 1.5).unwrap();
    let cfg = SolverConfig::default();
    let a = MarketParams::new(0.05, 100.0).unwrap();
    let b = MarketParams::new(0.05, 250.0).unwrap();
    let sa = solve_free_boundary(&model, &a, None, &cfg).unwrap();
    let sb = solve_free_boundary(&model, &b, None, &cfg).unwrap();
    let ratio = sb.rho / sa.rho;
    assert!((ratio / 2.5 - 1.0).abs() < 1e-9, "{ratio}");
    let va = evaluate(&model, &a, &sa, 120.0, &cfg).unwrap().v;
    let vb = evaluate(&model, &b, &sb, 300.0, &cfg).unwrap().v;
    assert!((vb / va / 2.5 - 1.0).abs() < 1e-8);
}

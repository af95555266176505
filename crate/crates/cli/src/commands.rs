use std::sync::Arc;
use std::time::Instant;

use perpetual_core::merton::{bounds_interval, gamma_minus, gamma_plus, MertonSolution};
use perpetual_core::pricer::{asset_grid, build_curve, price, CurvePoint};
use perpetual_core::solver::{solve_free_boundary, FreeBoundarySolution, MarketParams, Method};
use perpetual_core::volatility::{ModelSpec, ModelVariant, PsiTable, VolatilityModel};
use rayon::prelude::*;
use serde_json::Value;

use crate::args::{CommonArgs, GridArgs, ModelArg, SweepArgs, SweepParam, TableArgs};
use crate::config::{Format, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{emit, to_json_text, Cell, Table};

/// Reference boundary and strike value for RAPM with r = 0.1, E = 100,
/// sigma0 = 0.3, as (lambda, rho, V(E)).
pub const REFERENCE_TABLE: [(f64, f64, f64); 7] = [
    (0.0, 68.9655, 13.5909),
    (0.2, 64.7181, 15.4853),
    (0.4, 61.2252, 17.1580),
    (0.6, 58.2647, 18.6669),
    (1.2, 51.1474, 22.5461),
    (1.6, 47.2975, 24.7444),
    (2.0, 44.5433, 26.6804),
];

/// Tolerance for the lambda = 0 row, which has a closed form.
const CLOSED_FORM_TOL: f64 = 1e-3;
const POINTS_PER_TASK: usize = 16;

fn solve(model: &VolatilityModel, market: &MarketParams, cfg: &RunConfig) -> CliResult<FreeBoundarySolution> {
    let method = cfg.method.unwrap_or_else(|| Method::auto_for(model));
    solve_free_boundary(model, market, Some(method), &cfg.solver_config())
        .map_err(CliError::solver(format!("boundary ({})", method.name())))
}

fn trajectory_json(sol: &FreeBoundarySolution) -> Value {
    sol.trajectory()
        .map(|t| serde_json::to_value(&t.points).unwrap_or(Value::Null))
        .unwrap_or(Value::Null)
}

pub fn boundary(args: &CommonArgs) -> CliResult<()> {
    let cfg = RunConfig::resolve(args, None)?;
    let model = cfg.build_model()?;
    let start = Instant::now();
    let sol = solve(&model, &cfg.market, &cfg)?;
    let bounds = if model.s_independent() {
        Some(bounds_interval(&model, cfg.market.r, cfg.market.strike).map_err(CliError::solver("bounds"))?)
    } else {
        None
    };
    if cfg.verbose {
        eprintln!("solved in {:.3} s", start.elapsed().as_secs_f64());
    }

    let mut table = Table::new(&["rho", "x0", "method", "phi_residual", "rho_plus", "rho_minus"]);
    table.push(vec![
        sol.rho.into(),
        sol.x0.into(),
        sol.method.name().into(),
        sol.phi_residual.into(),
        bounds.map(|b| b.0).into(),
        bounds.map(|b| b.1).into(),
    ]);
    let text = match cfg.format {
        Format::Csv => table.to_csv(),
        Format::Json => {
            let mut obj = table.first_as_json();
            if cfg.verbose {
                obj["trajectory"] = trajectory_json(&sol);
            }
            to_json_text(&obj)
        }
    };
    emit(&text, cfg.output.as_deref())
}

fn curve_table(points: &[CurvePoint]) -> Table {
    let mut table = Table::new(&["S", "V", "delta", "H", "residual", "V_sub", "V_super"]);
    for p in points {
        table.push(vec![
            p.s.into(),
            p.v.into(),
            p.delta.into(),
            p.h.into(),
            p.residual.into(),
            p.v_sub.into(),
            p.v_super.into(),
        ]);
    }
    table
}

pub fn price_curve(args: &CommonArgs, grid_args: &GridArgs) -> CliResult<()> {
    let cfg = RunConfig::resolve(args, Some(grid_args))?;
    let model = cfg.build_model()?;
    let sol = solve(&model, &cfg.market, &cfg)?;
    let s_min = cfg.grid.s_min.unwrap_or(sol.rho);
    if s_min > cfg.grid.s_max {
        return Err(CliError::Config(format!(
            "grid needs s_min <= s_max, got [{s_min}, {}]",
            cfg.grid.s_max
        )));
    }
    let grid = asset_grid(s_min, cfg.grid.s_max, cfg.grid.n, cfg.grid.log_spacing)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let solver_cfg = cfg.solver_config();
    let chunks: Vec<Vec<CurvePoint>> = grid
        .par_chunks(POINTS_PER_TASK)
        .map(|chunk| build_curve(&model, &cfg.market, &sol, chunk, &solver_cfg).map(|c| c.points))
        .collect::<Result<_, _>>()
        .map_err(CliError::solver("price curve"))?;
    let points: Vec<CurvePoint> = chunks.into_iter().flatten().collect();
    emit(&curve_table(&points).render(cfg.format), cfg.output.as_deref())
}

fn parse_list(text: &str, what: &str) -> CliResult<Vec<f64>> {
    let values = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Config(format!("{what}: cannot parse {s:?} as a number")))
        })
        .collect::<CliResult<Vec<f64>>>()?;
    if values.is_empty() {
        return Err(CliError::Config(format!("{what}: empty list")));
    }
    Ok(values)
}

/// `(rho, V(E))` for one model.
fn boundary_and_value(model: &VolatilityModel, market: &MarketParams, cfg: &RunConfig) -> CliResult<(f64, f64)> {
    let sol = solve(model, market, cfg)?;
    let v =
        price(model, market, &sol, market.strike, &cfg.solver_config()).map_err(CliError::solver("price at strike"))?;
    Ok((sol.rho, v))
}

pub fn table(args: &TableArgs) -> CliResult<()> {
    if args.common.model.is_some_and(|m| m != ModelArg::Rapm) {
        return Err(CliError::Config("the table command uses the rapm model".into()));
    }
    let lambdas = match &args.lambdas {
        Some(text) => parse_list(text, "--lambdas")?,
        None => REFERENCE_TABLE.iter().map(|row| row.0).collect(),
    };
    if !(args.tol_rho > 0.0 && args.tol_v > 0.0) {
        return Err(CliError::Config("check tolerances must be positive".into()));
    }
    let cfg = RunConfig::resolve(&args.common, None)?;

    let rows: Vec<(f64, f64)> = lambdas
        .par_iter()
        .map(|&lambda| {
            let spec = ModelSpec {
                variant: ModelVariant::Rapm,
                lambda,
                ..cfg.model
            };
            let model = VolatilityModel::from_spec(&spec).map_err(|e| CliError::Config(e.to_string()))?;
            boundary_and_value(&model, &cfg.market, &cfg)
        })
        .collect::<CliResult<_>>()?;

    // reference values only apply to one parameter set
    let reference_set = cfg.market.r == 0.1 && cfg.market.strike == 100.0 && cfg.model.sigma0 == 0.3;
    let mut out = Table::new(&["lambda", "rho", "V_E", "rho_ref", "V_ref", "rho_dev", "V_dev"]);
    let mut violations = Vec::new();
    for (&lambda, &(rho, v)) in lambdas.iter().zip(&rows) {
        let reference = REFERENCE_TABLE
            .iter()
            .find(|row| row.0 == lambda)
            .filter(|_| reference_set);
        let mut row: Vec<Cell> = vec![lambda.into(), rho.into(), v.into()];
        match reference {
            Some(&(_, rho_ref, v_ref)) => {
                let (d_rho, d_v) = ((rho - rho_ref).abs(), (v - v_ref).abs());
                row.extend([rho_ref.into(), v_ref.into(), d_rho.into(), d_v.into()]);
                let (tol_rho, tol_v) = if lambda == 0.0 {
                    (CLOSED_FORM_TOL, CLOSED_FORM_TOL)
                } else {
                    (args.tol_rho, args.tol_v)
                };
                if d_rho > tol_rho {
                    violations.push(format!("lambda={lambda}: |rho - {rho_ref}| = {d_rho:.4} > {tol_rho}"));
                }
                if d_v > tol_v {
                    violations.push(format!("lambda={lambda}: |V(E) - {v_ref}| = {d_v:.4} > {tol_v}"));
                }
            }
            None => row.extend([Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]),
        }
        out.push(row);
    }
    emit(&out.render(cfg.format), cfg.output.as_deref())?;

    if args.check {
        if !reference_set {
            return Err(CliError::Config(
                "--check compares against r=0.1, E=100, sigma0=0.3 only".into(),
            ));
        }
        if violations.is_empty() {
            eprintln!("check passed");
        } else {
            for v in &violations {
                eprintln!("  {v}");
            }
            return Err(CliError::Check(format!(
                "{} value(s) outside tolerance",
                violations.len()
            )));
        }
    }
    Ok(())
}

fn sweep_spec(base: &ModelSpec, param: SweepParam, value: f64) -> CliResult<ModelSpec> {
    let mut spec = *base;
    match param {
        SweepParam::Lambda if base.variant != ModelVariant::Rapm => {
            return Err(CliError::Config("sweeping lambda needs --model rapm".into()))
        }
        SweepParam::A if base.variant != ModelVariant::BarlesSoner => {
            return Err(CliError::Config("sweeping a needs --model barles-soner".into()))
        }
        SweepParam::Lambda => spec.lambda = value,
        SweepParam::A => spec.a = value,
        SweepParam::Sigma0 => spec.sigma0 = value,
        SweepParam::R => {}
    }
    Ok(spec)
}

fn trend(prev: f64, next: f64) -> &'static str {
    if next < prev {
        "decreasing"
    } else if next > prev {
        "increasing"
    } else {
        "flat"
    }
}

pub fn sweep(args: &SweepArgs) -> CliResult<()> {
    let cfg = RunConfig::resolve(&args.common, None)?;
    let values = parse_list(&args.values, "--values")?;
    // fail fast on a parameter the model does not have
    sweep_spec(&cfg.model, args.param, values[0])?;
    let psi = if cfg.model.variant == ModelVariant::BarlesSoner {
        Some(Arc::new(PsiTable::build().map_err(CliError::solver("Psi table"))?))
    } else {
        None
    };

    let results: Vec<CliResult<(f64, f64)>> = values
        .par_iter()
        .map(|&value| {
            let spec = sweep_spec(&cfg.model, args.param, value)?;
            let market = MarketParams {
                r: if args.param == SweepParam::R {
                    value
                } else {
                    cfg.market.r
                },
                ..cfg.market
            };
            market.validate().map_err(|e| CliError::Config(e.to_string()))?;
            let model = match &psi {
                Some(table) => VolatilityModel::barles_soner_with_table(spec.sigma0, spec.a, table.clone()),
                None => VolatilityModel::from_spec(&spec),
            }
            .map_err(|e| CliError::Config(e.to_string()))?;
            boundary_and_value(&model, &market, &cfg)
        })
        .collect();

    let name = match args.param {
        SweepParam::Lambda => "lambda",
        SweepParam::A => "a",
        SweepParam::Sigma0 => "sigma0",
        SweepParam::R => "r",
    };
    let mut out = Table::new(&[name, "rho", "V_E", "rho_trend", "error"]);
    let mut previous: Option<f64> = None;
    let mut failures = 0;
    for (&value, result) in values.iter().zip(&results) {
        match result {
            Ok((rho, v)) => {
                let t = previous.map_or("", |p| trend(p, *rho));
                previous = Some(*rho);
                out.push(vec![value.into(), (*rho).into(), (*v).into(), t.into(), Cell::Empty]);
            }
            Err(e) => {
                failures += 1;
                eprintln!("{name}={value}: {e}");
                out.push(vec![
                    value.into(),
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    e.to_string().into(),
                ]);
            }
        }
    }
    emit(&out.render(cfg.format), cfg.output.as_deref())?;
    if failures > 0 {
        return Err(CliError::SweepRows(failures));
    }
    Ok(())
}

pub fn bounds(args: &CommonArgs) -> CliResult<()> {
    let cfg = RunConfig::resolve(args, None)?;
    let model = cfg.build_model()?;
    let (r, strike) = (cfg.market.r, cfg.market.strike);
    let g_minus = gamma_minus(&model, r).map_err(CliError::solver("gamma_minus"))?;
    let g_plus = gamma_plus(&model, r).map_err(CliError::solver("gamma_plus"))?;
    let sub = MertonSolution::new(g_minus, strike).map_err(CliError::solver("sub-solution"))?;
    let sup = MertonSolution::new(g_plus, strike).map_err(CliError::solver("super-solution"))?;
    let mut out = Table::new(&[
        "gamma_minus",
        "gamma_plus",
        "rho_plus",
        "rho_minus",
        "V_sub_E",
        "V_super_E",
    ]);
    out.push(vec![
        g_minus.into(),
        g_plus.into(),
        sup.boundary.into(),
        sub.boundary.into(),
        sub.price(strike).into(),
        sup.price(strike).into(),
    ]);
    let text = match cfg.format {
        Format::Csv => out.to_csv(),
        Format::Json => to_json_text(&out.first_as_json()),
    };
    emit(&text, cfg.output.as_deref())
}

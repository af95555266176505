//! Run configuration: JSON file values overridden by command-line flags.

use std::path::{Path, PathBuf};

use perpetual_core::solver::{MarketParams, Method, SolverConfig};
use perpetual_core::volatility::{ModelSpec, ModelVariant, VolatilityModel};
use serde::Deserialize;

use crate::args::{CommonArgs, FormatArg, GridArgs, MethodArg, ModelArg};
use crate::error::{CliError, CliResult};

pub const DEFAULT_R: f64 = 0.1;
pub const DEFAULT_STRIKE: f64 = 100.0;
pub const DEFAULT_SIGMA0: f64 = 0.3;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_S_MAX: f64 = 300.0;
pub const DEFAULT_N: usize = 200;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub model: FileModel,
    #[serde(default)]
    pub market: FileMarket,
    #[serde(default)]
    pub solver: FileSolver,
    #[serde(default)]
    pub output: FileOutput,
    #[serde(default)]
    pub grid: FileGrid,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileModel {
    pub variant: Option<ModelVariant>,
    pub sigma0: Option<f64>,
    pub lambda: Option<f64>,
    pub a: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileMarket {
    pub r: Option<f64>,
    pub strike: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSolver {
    /// `general`, `w-quad`, `h-quad` or `auto`.
    pub method: Option<String>,
    pub tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileOutput {
    pub format: Option<String>,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileGrid {
    pub s_min: Option<f64>,
    pub s_max: Option<f64>,
    pub n: Option<usize>,
    /// `linear` or `log`.
    pub spacing: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub s_min: Option<f64>,
    pub s_max: f64,
    pub n: usize,
    pub log_spacing: bool,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub market: MarketParams,
    /// `None` selects the method automatically.
    pub method: Option<Method>,
    pub tol: f64,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub grid: GridSpec,
    pub verbose: bool,
}

fn parse_method(s: &str) -> CliResult<Option<Method>> {
    match s {
        "general" => Ok(Some(Method::GeneralOde)),
        "w-quad" => Ok(Some(Method::WQuadrature)),
        "h-quad" => Ok(Some(Method::HQuadrature)),
        "auto" => Ok(None),
        other => Err(CliError::Config(format!("unknown method {other:?}"))),
    }
}

fn parse_format(s: &str) -> CliResult<Format> {
    match s {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        other => Err(CliError::Config(format!("unknown format {other:?}"))),
    }
}

fn parse_spacing(s: &str) -> CliResult<bool> {
    match s {
        "log" => Ok(true),
        "linear" => Ok(false),
        other => Err(CliError::Config(format!("unknown grid spacing {other:?}"))),
    }
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs, grid: Option<&GridArgs>) -> CliResult<Self> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };

        let variant = match args.model {
            Some(ModelArg::Constant) => ModelVariant::Constant,
            Some(ModelArg::Rapm) => ModelVariant::Rapm,
            Some(ModelArg::BarlesSoner) => ModelVariant::BarlesSoner,
            None => file.model.variant.unwrap_or(ModelVariant::Rapm),
        };
        let lambda = args.lambda.or(file.model.lambda);
        let a = args.a.or(file.model.a);
        if lambda.is_some_and(|l| l != 0.0) && variant != ModelVariant::Rapm {
            return Err(CliError::Config("lambda only applies to the rapm model".into()));
        }
        if a.is_some_and(|a| a != 0.0) && variant != ModelVariant::BarlesSoner {
            return Err(CliError::Config("a only applies to the barles-soner model".into()));
        }
        let model = ModelSpec {
            variant,
            sigma0: args.sigma0.or(file.model.sigma0).unwrap_or(DEFAULT_SIGMA0),
            lambda: lambda.unwrap_or(0.0),
            a: a.unwrap_or(0.0),
        };

        let market = MarketParams {
            r: args.r.or(file.market.r).unwrap_or(DEFAULT_R),
            strike: args.strike.or(file.market.strike).unwrap_or(DEFAULT_STRIKE),
        };
        market.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let method = match args.method {
            Some(MethodArg::General) => Some(Method::GeneralOde),
            Some(MethodArg::WQuad) => Some(Method::WQuadrature),
            Some(MethodArg::HQuad) => Some(Method::HQuadrature),
            Some(MethodArg::Auto) => None,
            None => match &file.solver.method {
                Some(m) => parse_method(m)?,
                None => None,
            },
        };
        if variant == ModelVariant::BarlesSoner && matches!(method, Some(Method::WQuadrature | Method::HQuadrature)) {
            return Err(CliError::Config(
                "quadrature methods need a volatility independent of S; use --method general".into(),
            ));
        }

        let tol = args.tol.or(file.solver.tol).unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol < 1.0) {
            return Err(CliError::Config(format!("tolerance must lie in (0, 1), got {tol}")));
        }

        let format = match args.format {
            Some(FormatArg::Csv) => Format::Csv,
            Some(FormatArg::Json) => Format::Json,
            None => match &file.output.format {
                Some(f) => parse_format(f)?,
                None => Format::Csv,
            },
        };

        let flags = grid.cloned().unwrap_or_default();
        let log_spacing = if flags.log_grid {
            true
        } else {
            match &file.grid.spacing {
                Some(s) => parse_spacing(s)?,
                None => false,
            }
        };
        let grid = GridSpec {
            s_min: flags.s_min.or(file.grid.s_min),
            s_max: flags.s_max.or(file.grid.s_max).unwrap_or(DEFAULT_S_MAX),
            n: flags.n.or(file.grid.n).unwrap_or(DEFAULT_N),
            log_spacing,
        };
        if let Some(s_min) = grid.s_min {
            if !(s_min > 0.0 && s_min <= grid.s_max) {
                return Err(CliError::Config(format!(
                    "grid needs 0 < s_min <= s_max, got [{s_min}, {}]",
                    grid.s_max
                )));
            }
        }
        if !(grid.s_max > 0.0 && grid.s_max.is_finite()) || grid.n == 0 {
            return Err(CliError::Config("grid needs s_max > 0 and n >= 1".into()));
        }

        Ok(Self {
            model,
            market,
            method,
            tol,
            format,
            output: args.output.clone().or(file.output.path),
            grid,
            verbose: args.verbose,
        })
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig::with_root_tol(self.tol)
    }

    pub fn build_model(&self) -> CliResult<VolatilityModel> {
        VolatilityModel::from_spec(&self.model).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args() -> CommonArgs {
        CommonArgs::default()
    }

    #[test]
    fn defaults() {
        let cfg = RunConfig::resolve(&args(), None).unwrap();
        assert_eq!(cfg.model.variant, ModelVariant::Rapm);
        assert_eq!((cfg.market.r, cfg.market.strike, cfg.model.sigma0), (0.1, 100.0, 0.3));
        assert_eq!(cfg.method, None);
        assert_eq!(cfg.format, Format::Csv);
        assert_eq!(cfg.grid.s_max, 300.0);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(
            &path,
            r#"{"model": {"variant": "rapm", "lambda": 2.0}, "market": {"r": 0.05},
                "solver": {"method": "w-quad"}, "grid": {"spacing": "log", "n": 7}}"#,
        )
        .unwrap();
        let mut a = args();
        a.config = Some(path);
        a.lambda = Some(1.0);
        let cfg = RunConfig::resolve(&a, None).unwrap();
        assert_eq!(cfg.model.lambda, 1.0);
        assert_eq!(cfg.market.r, 0.05);
        assert_eq!(cfg.method, Some(Method::WQuadrature));
        assert!(cfg.grid.log_spacing);
        assert_eq!(cfg.grid.n, 7);
    }

    #[test]
    fn rejects_inconsistent_input() {
        let mut a = args();
        a.model = Some(ModelArg::Constant);
        a.lambda = Some(1.0);
        assert!(RunConfig::resolve(&a, None).is_err());

        let mut a = args();
        a.model = Some(ModelArg::BarlesSoner);
        a.method = Some(MethodArg::HQuad);
        assert!(RunConfig::resolve(&a, None).is_err());

        let mut a = args();
        a.r = Some(-0.1);
        assert!(RunConfig::resolve(&a, None).is_err());

        let grid = GridArgs {
            s_min: Some(400.0),
            s_max: Some(300.0),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&args(), Some(&grid)).is_err());
    }

    #[test]
    fn unknown_file_keys_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, r#"{"modle": {}}"#).unwrap();
        let mut a = args();
        a.config = Some(path);
        assert!(matches!(RunConfig::resolve(&a, None), Err(CliError::Config(_))));
    }
}

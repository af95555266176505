use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "perpetual",
    version,
    about = "Perpetual American put under nonlinear volatility"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Early exercise boundary and its Merton bounds.
    Boundary(CommonArgs),
    /// Option value, delta, H and residual on an asset grid.
    Price {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Boundary and value at the strike over a list of lambda values (RAPM).
    Table(TableArgs),
    /// One solve per value of a single parameter.
    Sweep(SweepArgs),
    /// Exponents and boundaries of the sub- and super-solutions.
    Bounds(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Constant,
    Rapm,
    #[value(alias = "barles_soner", alias = "bs")]
    BarlesSoner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    General,
    WQuad,
    HQuad,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    Lambda,
    A,
    Sigma0,
    R,
}

/// Options shared by every subcommand. Unset flags fall back to the
/// `--config` file and then to the built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long)]
    pub sigma0: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub strike: Option<f64>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Relative tolerance on the boundary; inner tolerances are 100x tighter.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Include trajectories and timings.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GridArgs {
    /// Defaults to the computed boundary.
    #[arg(long)]
    pub s_min: Option<f64>,
    #[arg(long)]
    pub s_max: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Space grid points evenly in ln S.
    #[arg(long)]
    pub log_grid: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated lambda values; defaults to the reference grid.
    #[arg(long)]
    pub lambdas: Option<String>,
    /// Compare against the reference values and fail above tolerance.
    #[arg(long)]
    pub check: bool,
    #[arg(long, default_value_t = 0.05)]
    pub tol_rho: f64,
    #[arg(long, default_value_t = 0.05)]
    pub tol_v: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub param: SweepParam,
    /// Comma-separated parameter values.
    #[arg(long)]
    pub values: String,
}

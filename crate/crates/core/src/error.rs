use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(&'static str),

    #[error("invalid bracket [{lo}, {hi}]")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("root finder did not converge in {0} iterations")]
    MaxIterExceeded(usize),

    #[error("quadrature exceeded {limit} subdivisions (error estimate {error:e})")]
    MaxSubdivisions { limit: usize, error: f64 },

    #[error("non-finite value {value} at x = {x}")]
    NonFinite { x: f64, value: f64 },

    #[error("ODE step size underflow at x = {x} (h = {h:e})")]
    StepUnderflow { x: f64, h: f64 },

    #[error("ODE stop condition not reached before x = {x}")]
    HorizonExceeded { x: f64 },

    #[error("asset price must be positive, got {0}")]
    NonPositiveAsset(f64),

    #[error("gamma H must be positive, got {0}")]
    NonPositiveGamma(f64),

    #[error("negative Psi argument {0}")]
    NegativeArgument(f64),

    #[error("inverting H -> sigma^2 H / 2 failed at w = {w}")]
    InversionFailed { w: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("volatility model depends on S; this method requires sigma = sigma(H)")]
    NotSIndependent,

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("could not bracket the free boundary after {0} expansions")]
    BracketExpansionFailed(usize),
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure in {stage}: {source}")]
    Solver {
        stage: String,
        source: perpetual_core::Error,
    },
    #[error("check failed: {0}")]
    Check(String),
    #[error("{0} sweep row(s) failed")]
    SweepRows(usize),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Check(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Solver { .. } => 3,
            CliError::SweepRows(_) => 4,
        }
    }

    /// Wraps a core error raised while running `stage`. Model/method
    /// mismatches are configuration errors, everything else is a solver failure.
    pub fn solver(stage: impl Into<String>) -> impl FnOnce(perpetual_core::Error) -> CliError {
        let stage = stage.into();
        move |source| match source {
            perpetual_core::Error::NotSIndependent | perpetual_core::Error::InvalidParams(_) => {
                CliError::Config(format!("{stage}: {source}"))
            }
            source => CliError::Solver { stage, source },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

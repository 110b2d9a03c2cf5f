use alloc::string::String;

/// Errors produced anywhere in the core pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("kernel fit did not converge (residual {residual:e})")]
    FitFailed { residual: f64 },
    #[error("non-finite coordinate encountered at layout iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("point cloud of {n} points exceeds the persistence size cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("need at least {needed} finite H0 bars, found {found}")]
    InsufficientBars { found: usize, needed: usize },
    #[error("study has no successful trials")]
    EmptyStudy,
}

pub type Result<T> = core::result::Result<T, Error>;

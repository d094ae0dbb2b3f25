use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown mode `{0}`")]
    UnknownMode(String),
    #[error("mode `{mode}` truncation {dim} is below 2")]
    Truncation { mode: String, dim: usize },
    #[error("level {level} out of range for mode `{mode}` (dim {dim})")]
    LevelOutOfRange { mode: String, level: usize, dim: usize },
    #[error("operands live on different mode layouts")]
    LayoutMismatch,
    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("integration failed at t = {t:e}: {reason}")]
    Integration { t: f64, reason: String },
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("series pole near NLR level {level}{}", .sideband.map(|s| format!(" (sideband {s})")).unwrap_or_default())]
    Pole { level: usize, sideband: Option<i64> },
    #[error("series did not converge within {0} terms")]
    NoConvergence(usize),
    #[error("bare state {0} has no matched hybridized state")]
    Unmatched(String),
}

pub type Result<T> = std::result::Result<T, Error>;

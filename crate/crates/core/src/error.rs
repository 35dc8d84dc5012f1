use std::path::PathBuf;

use crate::profile::ProfileSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error("series start refused: r = {r} exceeds the admissible bound {bound}")]
    SeriesRange { r: f64, bound: f64 },
    #[error("integration stopped at {at}: step underflow or step budget exhausted ({samples} samples computed)")]
    StepFailure {
        at: f64,
        samples: usize,
        partial: Option<Box<ProfileSolution>>,
    },
    #[error("no A-verdict below beta = {cap}")]
    NoBracket { cap: f64 },
    #[error("integrity violation: {0}")]
    Integrity(String),
    #[error("fit window refused: {0}")]
    FitWindow(String),
    #[error("{what} = {value} outside the valid range [{lo}, {hi}]")]
    Range { what: &'static str, value: f64, lo: f64, hi: f64 },
    #[error("(t, r) = ({t}, {r}) outside the valid region 0 <= r·exp(-beta (t + t0)) <= {rho_max}")]
    Region { t: f64, r: f64, rho_max: f64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Process exit code: 1 for bad input, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::StepFailure { .. } | Error::NoBracket { .. } | Error::Integrity(_) => 2,
            _ => 1,
        }
    }
}

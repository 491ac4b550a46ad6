use std::path::PathBuf;

use thiserror::Error;

use crate::arma_fit::FitReport;
use crate::moments::MultiIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("filter is not stable (max pole real part {max_real:.3e})")]
    UnstableFilter { max_real: f64 },

    #[error("ARMA fit did not converge (best relative residual {:.4})", best.residual)]
    FitNotConverged { best: Box<FitReport> },

    #[error("optimizer failed: {0}")]
    Optimizer(String),

    #[error("state blew up at t = {time:.3} s")]
    BlowUp { time: f64 },

    #[error("non-finite moment state at t = {time:.3} s")]
    NonFinite { time: f64 },

    #[error("moment set incomplete, missing {} indices (first: {})", missing.len(), missing.first().map(|m| m.to_string()).unwrap_or_default())]
    IncompleteMoments { missing: Vec<MultiIndex> },

    #[error("closure target order {order} must exceed closure order {closure_order}")]
    ClosureNotNeeded { order: u32, closure_order: u32 },

    #[error("closure target order {order} exceeds the supported cap {cap}")]
    OrderCap { order: u32, cap: u32 },

    #[error("density is not integrable: {0}")]
    NotIntegrable(String),

    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(path: &str, msg: impl Into<String>) -> Self {
        Error::Config {
            path: path.to_string(),
            msg: msg.into(),
        }
    }
}

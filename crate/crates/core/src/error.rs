use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid value for `{field}`: {reason}")]
    InvalidField { field: &'static str, reason: String },

    #[error("no decoherence timescale: Lambda must be positive")]
    NoDecoherence,

    #[error("long-time coherence limit is undefined at t = 0")]
    ZeroTime,

    #[error("cubic G(t) is not positive at t = {t} (G = {value})")]
    NonPositiveCubic { t: f64, value: f64 },

    #[error("integration failed at t = {t}: {reason}")]
    IntegrationFailure { t: f64, reason: String },

    #[error("non-finite field value after step ending at t = {t}")]
    NonFinite { t: f64 },

    #[error(
        "grid too small: need extent_y >= {required_y:.4} and extent_z >= {required_z:.4} \
         (have {extent_y:.4}, {extent_z:.4})"
    )]
    UndersizedGrid {
        required_y: f64,
        required_z: f64,
        extent_y: f64,
        extent_z: f64,
    },

    #[error("state not localized in y: fitted curvature {curvature} is not positive")]
    NotLocalized { curvature: f64 },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("hierarchy order {0} is unsupported (orders 0..=2 only)")]
    UnsupportedOrder(usize),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

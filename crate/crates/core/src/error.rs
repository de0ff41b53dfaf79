use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}x{expected}, got {rows}x{cols}")]
    DimensionMismatch {
        expected: usize,
        rows: usize,
        cols: usize,
    },

    #[error("integrator failure at dt = {dt:e} us: trace drifted by {deviation:e}")]
    IntegratorFailure { dt: f64, deviation: f64 },

    #[error("eigendecomposition failed for {config}")]
    Eigen { config: String },

    #[error("sweep does not bracket {target} ({name} spans {lo}..{hi})")]
    NotBracketed {
        name: &'static str,
        target: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            field,
            reason: reason.into(),
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("`{0}` must be finite")]
    NonFinite(&'static str),

    #[error("efficiency `{name}` = {value} is outside [0, 1]")]
    EfficiencyOutOfRange { name: &'static str, value: f64 },

    #[error("Fock cutoff n_max = {n_max} too small for |alpha| = {alpha_abs}: coherent tail mass {tail_mass:.3e} >= 1e-12")]
    CutoffTooSmall {
        n_max: usize,
        alpha_abs: f64,
        tail_mass: f64,
    },

    #[error("operator product leaves the truncated space: discarded weight {discarded:.3e}")]
    CutoffOverflow { discarded: f64 },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("observable variance {variance:.3e} is degenerate")]
    DegenerateVariance { variance: f64 },

    #[error("covariance matrix is singular or ill-conditioned (condition number {condition:.3e})")]
    SingularCovariance { condition: f64 },

    #[error("observable coefficients must not all vanish")]
    ZeroObservable,

    #[error("sampling grid misses probability mass {mass:.3e} (limit 1e-10)")]
    GridMass { mass: f64 },

    #[error("calibration curve is not strictly monotonic on [{lo:.6}, {hi:.6}]")]
    NonMonotonicRange { lo: f64, hi: f64 },

    #[error("phase range [{lo:.6}, {hi:.6}] leaves the estimation branch (pi/2, 3pi/2)")]
    OutsideBranch { lo: f64, hi: f64 },

    #[error("mean {mean:.6e} lies outside the calibration range [{lo:.6e}, {hi:.6e}]")]
    OutOfRange { mean: f64, lo: f64, hi: f64 },

    #[error("insufficient samples: got {got}, need at least {need}")]
    InsufficientSamples { got: usize, need: usize },

    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used for process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Ingest,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config { .. }
            | Error::NonFinite(_)
            | Error::EfficiencyOutOfRange { .. }
            | Error::OutsideBranch { .. } => ErrorKind::Config,
            Error::Format { .. }
            | Error::Io { .. }
            | Error::Json(_)
            | Error::InsufficientSamples { .. } => ErrorKind::Ingest,
            _ => ErrorKind::Numeric,
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn ensure_finite(value: f64, name: &'static str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(name))
    }
}

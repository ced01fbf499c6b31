use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Parameter(String),

    #[error("singular parameter: {0}")]
    Singular(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("eigensolver failed for mode {mode} after {iterations} iterations: {detail}")]
    Eigen {
        mode: usize,
        iterations: usize,
        detail: String,
    },

    #[error("tridiagonal solve broke down at row {row}")]
    Tridiagonal { row: usize },

    #[error("numerical divergence at t = {t:e} s (step {step}): {detail}")]
    Divergence { t: f64, step: u64, detail: String },

    #[error("weak-probe regime violated at t = {t:e} s: max|rho21| = {max_abs}")]
    WeakProbe { t: f64, max_abs: f64 },

    #[error("fidelity undefined for a zero-norm field")]
    ZeroNorm,

    #[error("config error{}: {msg}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config { line: Option<usize>, msg: String },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config {
            line: None,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 config, 3 numeric, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Singular(_) | Error::Usage(_) | Error::Config { .. } => 2,
            Error::Eigen { .. }
            | Error::Tridiagonal { .. }
            | Error::Divergence { .. }
            | Error::WeakProbe { .. }
            | Error::ZeroNorm => 3,
            Error::Io { .. } => 4,
        }
    }
}

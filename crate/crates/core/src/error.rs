use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid too small: {nx}x{ny} (need at least 3 points per axis)")]
    GridTooSmall { nx: usize, ny: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("inconsistent data: {0}")]
    Consistency(String),

    #[error("numerical instability at node ({i}, {j}) after step {step}")]
    Instability { i: usize, j: usize, step: usize },

    #[error("negative concentration {value} at node ({i}, {j})")]
    NegativeConcentration { i: usize, j: usize, value: f64 },

    #[error("non-positive concentration {value} at node ({i}, {j})")]
    NonPositiveConcentration { i: usize, j: usize, value: f64 },

    #[error("linear solve did not converge: residual {residual:e} after {iterations} iterations")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("quasineutrality violated: {0}")]
    Quasineutrality(String),

    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("snapshot {path}: {message}")]
    Snapshot { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end. Each error family
    /// maps to a distinct code.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigSyntax { .. } | Error::Config(_) => 2,
            Error::InvalidParameter { .. } | Error::GridTooSmall { .. } | Error::GridMismatch => 3,
            Error::Consistency(_) => 4,
            Error::Instability { .. } => 5,
            Error::NonConvergence { .. } => 6,
            Error::NegativeConcentration { .. } | Error::NonPositiveConcentration { .. } => 7,
            Error::Io { .. } | Error::Snapshot { .. } => 8,
            Error::Quasineutrality(_) => 9,
        }
    }

    /// Short stable tag used in single-line diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ConfigSyntax { .. } | Error::Config(_) => "config",
            Error::InvalidParameter { .. } | Error::GridTooSmall { .. } | Error::GridMismatch => {
                "validation"
            }
            Error::Consistency(_) => "consistency",
            Error::Instability { .. } => "instability",
            Error::NonConvergence { .. } => "nonconvergence",
            Error::NegativeConcentration { .. } | Error::NonPositiveConcentration { .. } => {
                "concentration"
            }
            Error::Io { .. } | Error::Snapshot { .. } => "io",
            Error::Quasineutrality(_) => "neutrality",
        }
    }
}

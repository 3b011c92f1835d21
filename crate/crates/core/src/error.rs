use std::path::PathBuf;

use thiserror::Error;

use crate::neuralnet::ParamVector;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("parameter layout mismatch: {0}")]
    Structural(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("non-finite gradient at index {index} (value {value}) on step {step}")]
    NonFiniteGradient { index: usize, value: f64, step: u64 },

    #[error("training diverged at epoch {epoch}")]
    Divergence {
        epoch: usize,
        last_finite: Box<ParamVector>,
    },

    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),

    #[error("malformed header in {path}: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("truncated file {path}: expected {expected} bytes of samples, found {found}")]
    Truncated {
        path: PathBuf,
        expected: u64,
        found: u64,
    },

    #[error("non-finite sample at index {index} in {path}")]
    NonFiniteSample { path: PathBuf, index: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    /// Short machine-readable tag used in CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Argument(_) => "argument",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::Structural(_) => "structural",
            Error::Numerical(_) => "numerical",
            Error::NonFiniteGradient { .. } => "non_finite_gradient",
            Error::Divergence { .. } => "divergence",
            Error::UndefinedMetric(_) => "undefined_metric",
            Error::MalformedHeader { .. } => "malformed_header",
            Error::Truncated { .. } => "truncated",
            Error::NonFiniteSample { .. } => "non_finite_sample",
            Error::Io { .. } => "io",
            Error::Serde(_) => "serde",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

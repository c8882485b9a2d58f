use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the numerical and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("resonance at order {order}: |denominator| = {magnitude:e}")]
    Resonance { order: u32, magnitude: f64 },

    #[error("matrix is not Hermitian: ||A - A*||_F / ||A||_F = {relative_defect:e}")]
    NotHermitian { relative_defect: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal {off_diagonal:e})")]
    Convergence { sweeps: usize, off_diagonal: f64 },

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("MCMC chain error: {0}")]
    Chain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Resonance { .. } => "resonance",
            Error::NotHermitian { .. } => "not_hermitian",
            Error::Convergence { .. } => "convergence",
            Error::DegenerateSpectrum(_) => "degenerate_spectrum",
            Error::Chain(_) => "chain",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
            Error::Parse { .. } => "parse",
        }
    }

    /// True for errors caused by user input rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Json { .. } | Error::Parse { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

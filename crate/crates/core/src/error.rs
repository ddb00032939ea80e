use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a type invariant (non-positive temperature, zero pulses, ...).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A function was evaluated outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// `omega_star` needs a strictly hotter bath 1.
    #[error("no heat-engine window: beta1 = {beta1} must be strictly smaller than beta2 = {beta2}")]
    NoEngineWindow { beta1: f64, beta2: f64 },

    #[error("matrix is not unitary (max |U^dag U - I| = {0:e})")]
    NonUnitary(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Records from different (config, protocol, gate) triples were mixed.
    #[error("records belong to different ensembles")]
    MixedEnsemble,

    #[error("{}:{line}: {message}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::NoEngineWindow { .. } => 2,
            Error::NonUnitary(_) => 2,
            Error::Io { .. } => 3,
            Error::Parse { .. } => 4,
            Error::InsufficientData(_) | Error::MixedEnsemble => 1,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain where the formula is defined.
    #[error("{quantity} = {value} is out of range: {requirement}")]
    Domain {
        quantity: &'static str,
        value: f64,
        requirement: &'static str,
    },

    /// The complex response passes exactly through zero, so the phase is undefined.
    #[error("phase undefined: response vanishes (coupling {coupling}, detuning {detuning} rad/s)")]
    SingularPoint { coupling: f64, detuning: f64 },

    /// Doppler cooling needs red detuning.
    #[error("no Doppler cooling at detuning {detuning} rad/s (must be negative)")]
    NoCooling { detuning: f64 },

    #[error("invalid configuration: {0}")]
    Configuration(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("line {line}: key `{key}`: {message}")]
    Parse {
        line: usize,
        key: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Wraps an error raised while processing one detuning of a sweep.
    #[error("at detuning {detuning_gamma} Γ: {source}")]
    AtDetuning {
        detuning_gamma: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(quantity: &'static str, value: f64, requirement: &'static str) -> Self {
        Error::Domain {
            quantity,
            value,
            requirement,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input (configuration, parsing, domain).
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Domain { .. } | Error::Configuration(_) | Error::Parse { .. } => true,
            Error::AtDetuning { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid arc configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precision failure in {stage} for N={n}: {reason} (working precision {bits} bits)")]
    PrecisionFailure {
        stage: &'static str,
        n: usize,
        bits: u32,
        reason: String,
    },

    #[error("dense oracle size cap exceeded: N={n} > {cap}")]
    SizeCap { n: usize, cap: usize },

    #[error("free energy F^({g}) unavailable: {reason}")]
    UnavailableOrder { g: u32, reason: String },

    #[error("ill-conditioned extrapolation for F^({g}) at epsilon={epsilon}: estimate {estimate:e} +/- {uncertainty:e}")]
    IllConditioned {
        g: u32,
        epsilon: f64,
        estimate: f64,
        uncertainty: f64,
    },

    #[error("constant-sign resolution inconclusive: {0}")]
    Inconclusive(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("JSON error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// True for failures of the numerical pipeline, as opposed to bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::PrecisionFailure { .. } | Error::IllConditioned { .. } | Error::Inconclusive(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

//! Error types shared across the pipeline.
//!
//! Every error is classified as either a configuration/validation problem
//! (CLI exit code 2) or a runtime data problem (exit code 3).

use thiserror::Error;

/// Validation and processing errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration value violates its contract.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An input file could not be ingested.
    #[error("ingestion error: {0}")]
    Ingestion(String),

    /// A signal is degenerate for the requested operation (e.g. constant
    /// input to `normalize`, zero-energy input to `snr`).
    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    /// Peak detection failed.
    #[error("detection error: {0}")]
    Detection(String),

    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed on-disk artifact (meta.json, frame file, CSV).
    #[error("data error: {0}")]
    Data(String),
}

impl Error {
    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    /// CLI exit code for this error: 2 for configuration/validation
    /// problems, 3 for runtime data problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) => 2,
            Error::Ingestion(_) | Error::DegenerateSignal(_) | Error::Detection(_) => 3,
            Error::Io(_) | Error::Data(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by the numerical core, the audio front end, and the CLI.
#[derive(Debug, Error)]
pub enum AdlError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("column {column}: {source}")]
    Column {
        column: usize,
        #[source]
        source: Box<AdlError>,
    },

    #[error("class {class}: {source}")]
    Class {
        class: String,
        #[source]
        source: Box<AdlError>,
    },

    #[error("audio: {0}")]
    Audio(String),

    #[error("model file: {0}")]
    ModelFile(String),

    #[error("dataset: {0}")]
    Dataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl AdlError {
    pub(crate) fn at_column(self, column: usize) -> Self {
        AdlError::Column {
            column,
            source: Box::new(self),
        }
    }

    pub(crate) fn in_class(self, class: impl Into<String>) -> Self {
        AdlError::Class {
            class: class.into(),
            source: Box::new(self),
        }
    }

    /// True when the failure comes from the numerics (non-finite values,
    /// eigensolver breakdown) rather than from bad input data.
    pub fn is_numerical(&self) -> bool {
        match self {
            AdlError::NonFinite(_) | AdlError::NoConvergence { .. } => true,
            AdlError::Column { source, .. } | AdlError::Class { source, .. } => {
                source.is_numerical()
            }
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, AdlError>;

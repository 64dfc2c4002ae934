//! Error type shared by every module of the crate.

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed or non-finite input values.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A temperature that is zero, negative or non-finite.
    #[error(
        "invalid temperature {value} at position {index}: temperatures must be finite and > 0"
    )]
    InvalidTemperature { index: usize, value: f64 },

    /// An argument outside its documented range (bin counts, split fractions, alpha, ...).
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    /// Model and data disagree on the number of classes.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{path}: line {line}: {reason}")]
    Parse {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    /// The optimizer could not make progress from its starting point.
    #[error("fit failed{}: {reason} (iterations: {iterations}, objective: {objective}, gradient max-norm: {gradient_norm:e})",
        .context.as_deref().map(|c| format!(" for {c}")).unwrap_or_default())]
    Fit {
        context: Option<String>,
        reason: String,
        iterations: usize,
        objective: f64,
        gradient_norm: f64,
    },
}

impl Error {
    pub(crate) fn invalid_argument(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
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

    /// Attach a label (e.g. "bin 3") to a fit error.
    pub(crate) fn with_fit_context(self, label: impl Into<String>) -> Self {
        match self {
            Error::Fit {
                reason,
                iterations,
                objective,
                gradient_norm,
                ..
            } => Error::Fit {
                context: Some(label.into()),
                reason,
                iterations,
                objective,
                gradient_norm,
            },
            other => other,
        }
    }
}

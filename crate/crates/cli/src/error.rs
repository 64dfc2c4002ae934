use thiserror::Error;

/// Process exit codes.
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_FIT: u8 = 4;
pub const EXIT_MISMATCH: u8 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] ltcal::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        use ltcal::Error as E;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::Core(e) => match e {
                E::Io { .. } | E::Parse { .. } | E::Json { .. } => EXIT_IO,
                E::Fit { .. } => EXIT_FIT,
                E::DimensionMismatch(_) => EXIT_MISMATCH,
                E::InvalidInput(_) | E::InvalidTemperature { .. } | E::InvalidArgument { .. } => {
                    EXIT_USAGE
                }
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

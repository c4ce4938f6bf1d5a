use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] rsack_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn parse(path: impl std::fmt::Display, message: impl std::fmt::Display) -> Self {
        Self::Parse {
            path: path.to_string(),
            message: message.to_string(),
        }
    }

    /// Process exit code: 2 parse error, 3 insufficient data, 4 estimation
    /// failed, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use rsack_core::Error as E;
        match self {
            Self::Parse { .. } | Self::Core(E::Parse(_)) | Self::Csv(_) => 2,
            Self::Core(E::InsufficientData { .. }) => 3,
            Self::Core(E::EstimationFailed { .. }) => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

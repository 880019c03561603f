use std::path::PathBuf;

/// Failures of the command-line layer, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] dcnet_core::Error),
    #[error("verification failed: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// 2 for usage and configuration problems, 3 for failed verification,
    /// 1 for bad data.
    pub fn exit_code(&self) -> i32 {
        use dcnet_core::Error as C;
        match self {
            Error::Usage(_) | Error::Config(_) => 2,
            Error::Core(
                C::InvalidLadder(_) | C::InvalidArgument(_) | C::ResolutionGuard { .. },
            ) => 2,
            Error::Verification(_) => 3,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Core(#[from] recap_core::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 configuration, 3 data, 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        use recap_core::Error as C;
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::Io { .. } | Error::Format(_) => 3,
            Error::Core(e) => match e {
                C::InvalidParameter { .. } | C::ExternalOnly(_) | C::InvalidSeverity(_) => 2,
                C::DegenerateSpectrum(_) | C::Numerical(_) | C::NonFinite { .. } | C::ZeroDenominator(_) => 4,
                _ => 3,
            },
        }
    }
}

pub(crate) fn data(msg: impl Into<String>) -> Error {
    Error::Data(msg.into())
}

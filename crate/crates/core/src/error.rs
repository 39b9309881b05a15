use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("operator is not symmetric under translation and inversion: {0}")]
    NotSymmetric(String),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("numerical consistency failure: {0}")]
    Numerical(String),

    #[error("protocol does not match control basis: {0}")]
    ManifestMismatch(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Parse(_)
            | Error::InvalidArgument(_)
            | Error::NotSymmetric(_)
            | Error::ManifestMismatch(_) => 2,
            Error::Numerical(_) | Error::NotHermitian(_) => 3,
            Error::Io { .. } | Error::Csv(_) => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

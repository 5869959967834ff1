use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) | CliError::Io { .. } => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

impl From<rks_core::Error> for CliError {
    fn from(e: rks_core::Error) -> Self {
        use rks_core::Error as E;
        match e {
            E::Factorization { .. } | E::Asymmetric(_) => CliError::Numeric(e.to_string()),
            E::InvalidParameter(_) | E::NotClassification => CliError::Usage(e.to_string()),
            E::DimensionMismatch { .. } | E::NonFinite { .. } | E::InvalidData(_) => CliError::Data(e.to_string()),
        }
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema: {0}")]
    Schema(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("data: {0}")]
    Data(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The input is well-formed but the requested computation has no
    /// meaningful result (single class, constant columns, empty sets).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit code: 2 usage/config, 3 data, 4 numeric/degenerate.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema(_) | Error::InvalidArgument(_) | Error::Io(_) => 2,
            Error::Parse { .. } | Error::Data(_) | Error::Csv(_) | Error::Json(_) => 3,
            Error::Degenerate(_) => 4,
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
}

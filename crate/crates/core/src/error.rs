use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("scale error: {0}")]
    Scale(String),

    #[error("degenerate column {column}: column has zero norm")]
    DegenerateColumn { column: usize },

    #[error("conditioning error: {0}")]
    Conditioning(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("parse error at line {line}, byte offset {offset}: {message}")]
    Parse {
        line: usize,
        offset: usize,
        message: String,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used for CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parameter(_) | Error::Dimension(_) | Error::Scale(_) | Error::Config(_) => {
                ErrorKind::Config
            }
            Error::DegenerateColumn { .. }
            | Error::Conditioning(_)
            | Error::Data(_)
            | Error::Parse { .. }
            | Error::Format(_)
            | Error::Io(_) => ErrorKind::Data,
            Error::Context { source, .. } => source.kind(),
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

pub(crate) fn data(msg: impl Into<String>) -> Error {
    Error::Data(msg.into())
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: no samples found")]
    EmptyInput,

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: label `{label}` is not +1 or -1")]
    Label { line: usize, label: String },

    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training set needs both classes, found only {0}")]
    SingleClass(&'static str),

    #[error("kernel mismatch: representative set was derived with `{found}`, requested `{expected}`")]
    KernelMismatch { expected: String, found: String },

    #[error("representative set carries no gamma matrix")]
    MissingGamma,

    #[error("dense diagnostic needs N <= {cap}, got {n}")]
    TooLarge { n: usize, cap: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }

    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format { line, msg: msg.into() }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("parameter layout mismatch: expected {expected:#018x}, got {got:#018x}")]
    LayoutMismatch { expected: u64, got: u64 },

    #[error("decode error: {0}")]
    Decode(String),

    #[error("insufficient replay: have {have}, need {need}")]
    InsufficientReplay { have: usize, need: usize },

    #[error("federation error: {0}")]
    Federation(String),

    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

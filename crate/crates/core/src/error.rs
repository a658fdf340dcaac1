use thiserror::Error;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Problem with input data or a computation on it (exit code 1).
    Data,
    /// Problem with configuration or arguments (exit code 2).
    Config,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("sample {index}: non-monotonic timestamp {t} (previous {prev})")]
    NonMonotonicTimestamp { index: usize, prev: f64, t: f64 },

    #[error("sample {index}: non-finite value in field `{field}`")]
    NonFiniteSample { index: usize, field: &'static str },

    #[error("{path}: missing required column `{column}`")]
    MissingColumn { path: String, column: String },

    #[error("{path}: row {row}: {msg}")]
    Data { path: String, row: usize, msg: String },

    #[error("unknown locomotion mode `{0}`")]
    UnknownMode(String),

    #[error("degenerate training data: {0}")]
    DegenerateData(String),

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    #[error("classifier has no decision boundary (|w| = {w_abs:e} below tolerance)")]
    NoBoundary { w_abs: f64 },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("trial `{trial}` is not annotated: {msg}")]
    Labeling { trial: String, msg: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("model bank: {0}")]
    Bank(String),

    #[error("config: {0}")]
    Config(String),

    #[error("invalid synthetic script: {0}")]
    Script(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Which exit-code class this error belongs to.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::Script(_) | Error::UnknownMode(_) => ErrorClass::Config,
            _ => ErrorClass::Data,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// All failure modes surfaced by the library and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration file or invalid combination of options.
    #[error("config error: {0}")]
    Config(String),

    /// Input files disagree with each other or with the expected layout.
    #[error("schema error: {0}")]
    Schema(String),

    /// A label cell does not appear in the configured label map.
    #[error("label error: {0}")]
    Label(String),

    /// A feature column is missing from the manifest, or the manifest
    /// itself cannot be parsed.
    #[error("manifest error: {0}")]
    Manifest(String),

    /// A class is too small to be represented in every split part.
    #[error("stratification error: {0}")]
    Stratification(String),

    /// Model training received data it cannot learn from.
    #[error("training error: {0}")]
    Training(String),

    /// Optimization produced a non-finite loss.
    #[error("divergence: {0}")]
    Divergence(String),

    /// A requested metric has no defined value on the given inputs.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// An API or CLI argument violates a documented precondition.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the CLI: 2 for configuration and usage
    /// problems, 3 for data problems, 4 for undefined metrics.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Usage(_) | Error::Divergence(_) => 2,
            Error::Schema(_)
            | Error::Label(_)
            | Error::Manifest(_)
            | Error::Stratification(_)
            | Error::Training(_)
            | Error::Io(_) => 3,
            Error::UndefinedMetric(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use std::fmt;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Unparseable or invalid input; exit 2.
    Config(String),
    /// A run produced a non-finite value; exit 3.
    Divergence(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Divergence(_) => EXIT_DIVERGENCE,
            CliError::Io(_) => EXIT_IO,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Divergence(m) => write!(f, "numerical divergence: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<tokenflow_core::EnsembleError> for CliError {
    fn from(e: tokenflow_core::EnsembleError) -> Self {
        if e.is_divergence() {
            CliError::Divergence(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<tokenflow_core::ExperimentError> for CliError {
    fn from(e: tokenflow_core::ExperimentError) -> Self {
        match e {
            tokenflow_core::ExperimentError::Ensemble(inner) => inner.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

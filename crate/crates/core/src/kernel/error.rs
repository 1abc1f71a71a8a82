use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("missing state variable `{0}`")]
    MissingVariable(String),
    #[error("state variable `{0}` is not declared by the pipeline")]
    UnexpectedVariable(String),
    #[error("state variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("expected {expected} state values, got {actual}")]
    WidthMismatch { expected: usize, actual: usize },
    #[error("unknown variable `{name}`; valid names: {}", valid.join(", "))]
    UnknownVariable { name: String, valid: Vec<String> },
    #[error("stage `{stage}` writes variable index {index} outside the schema")]
    WriteOutOfSchema { stage: String, index: usize },
    #[error("stages `{first}` and `{second}` both write `{var}`")]
    ConflictingWriters {
        var: String,
        first: String,
        second: String,
    },
    #[error("stage `{stage}` wrote undeclared variable `{var}`")]
    UndeclaredWrite { stage: String, var: String },
    #[error("numerical divergence in stage `{stage}`: `{var}` = {value}")]
    NonFinite {
        stage: String,
        var: String,
        value: String,
    },
    #[error("stage `{stage}` failed: {message}")]
    Stage { stage: String, message: String },
    #[error("state at t={actual} does not continue from t={expected}")]
    TimeGap { expected: u64, actual: u64 },
    #[error("duplicate scenario id `{0}`")]
    DuplicateScenario(String),
    #[error("ensemble needs at least one run")]
    NoRuns,
    #[error("ensembles have mismatched shape: {0}")]
    ShapeMismatch(String),
}

impl KernelError {
    /// True for failures caused by a non-finite value rather than by
    /// configuration.
    pub fn is_divergence(&self) -> bool {
        matches!(self, KernelError::NonFinite { .. })
    }
}

/// A step failure with the timestep at which it happened.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("at t={t}: {source}")]
pub struct TrajectoryError {
    pub t: u64,
    #[source]
    pub source: KernelError,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnsembleError {
    /// `message` already names the scenario.
    #[error("{message}")]
    Invalid { scenario: String, message: String },
    #[error("scenario `{scenario}`: {source}")]
    Setup {
        scenario: String,
        #[source]
        source: KernelError,
    },
    #[error("scenario `{scenario}`, run {run_id}, t={t}: {source}")]
    Run {
        scenario: String,
        run_id: u64,
        t: u64,
        #[source]
        source: KernelError,
    },
}

impl EnsembleError {
    pub fn kernel(&self) -> Option<&KernelError> {
        match self {
            EnsembleError::Invalid { .. } => None,
            EnsembleError::Setup { source, .. } | EnsembleError::Run { source, .. } => Some(source),
        }
    }

    pub fn is_divergence(&self) -> bool {
        self.kernel().is_some_and(KernelError::is_divergence)
    }
}

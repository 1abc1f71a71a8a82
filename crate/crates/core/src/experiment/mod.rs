//! The initial-pool sweep and its cross-scenario statistics.

mod report;
mod scenario;

pub use report::{
    income_convergence_spread, ordering_verdicts, summarize, CrossScenarioStats, Outcome,
    ScenarioSummary, SweepReport, TerminalRow, Verdict, Verdicts, TREASURY_VALUE,
};
pub use scenario::{
    table3_scenarios, ParamOverrides, ScenarioSpec, DEFAULT_MASTER_SEED, TABLE3_DECAY_RATE,
    TABLE3_HORIZON, TABLE3_POOLS, TABLE3_RUNS,
};

use thiserror::Error;

use crate::kernel::{EnsembleError, KernelError};
use crate::model::ModelError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("`{0}` is a swept or fixed axis of the pool-size experiment and cannot be overridden")]
    SweptAxisOverride(&'static str),
    #[error("scenario `{id}`: {source}")]
    InvalidModel {
        id: String,
        #[source]
        source: ModelError,
    },
    #[error("scenario `{id}`: {message}")]
    InvalidScenario { id: String, message: String },
    #[error("need at least {needed} scenarios, got {got}")]
    TooFewScenarios { needed: usize, got: usize },
    #[error("scenario `{scenario}` has no `{variable}` series")]
    MissingSeries { scenario: String, variable: String },
    #[error("scenarios `{first}` and `{second}` share the same initial pool; ordering by pool size is undefined")]
    DuplicatePool { first: String, second: String },
    #[error("series for `{variable}` have different lengths across scenarios")]
    LengthMismatch { variable: String },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
}

//! Discrete-time state-space simulation for token economies.
//!
//! The crate is split in three layers:
//!
//! * [`kernel`] composes named state-update stages into a pipeline and runs
//!   seeded trajectories, Monte Carlo ensembles and scenario sweeps.
//! * [`model`] provides the application-subsidy token model: subsidy pool
//!   decay, app growth with periodic growth-rate retuning, developer income,
//!   and the foundation treasury.
//! * [`experiment`] packages the four-scenario initial-pool sweep and the
//!   cross-scenario statistics computed from its ensembles.
//!
//! All numerics are generic over [`Scalar`]; the `*64` aliases below fix the
//! scalar to `f64`, which is what the command-line driver uses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod experiment;
pub mod kernel;
pub mod model;
mod scalar;

pub use scalar::Scalar;

pub use experiment::{
    income_convergence_spread, ordering_verdicts, table3_scenarios, CrossScenarioStats,
    ExperimentError, Outcome, ParamOverrides, ScenarioSpec, ScenarioSummary, SweepReport, Verdict,
    Verdicts,
};
pub use kernel::{
    aggregate, run_monte_carlo, run_trajectory, step, sweep, AggregateSeries, Ensemble,
    EnsembleError, FnStage, KernelError, MonteCarloSpec, Schema, SimRng, SimState, Stage,
    Trajectory, TrajectoryError, UpdatePipeline, VarId,
};
pub use model::{
    build_insolar_pipeline, initial_state, FeeSpec, ModelError, ModelParams, NoiseSpec,
    PriceProxySpec, RetuneSpec, Stepping,
};

pub type SimState64 = SimState<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type Ensemble64 = Ensemble<f64>;
pub type AggregateSeries64 = AggregateSeries<f64>;
pub type ModelParams64 = ModelParams<f64>;
pub type ScenarioSpec64 = ScenarioSpec<f64>;
pub type SweepReport64 = SweepReport<f64>;
pub type InsolarPipeline<S> = UpdatePipeline<S, ModelParams<S>>;
pub type InsolarPipeline64 = InsolarPipeline<f64>;

pub type SimState32 = SimState<f32>;
pub type ModelParams32 = ModelParams<f32>;

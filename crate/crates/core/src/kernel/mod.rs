//! Generic discrete-time stepping engine.
//!
//! A model declares a [`Schema`] of named state variables and an ordered
//! [`UpdatePipeline`] of [`Stage`]s. Each step runs the stages in order;
//! a stage sees the state at `t` and the partially updated state at `t + 1`
//! produced by the stages before it, and writes only the variables it
//! declared. Variables no stage writes are carried forward unchanged.

mod aggregate;
mod error;
mod pipeline;
mod rng;
mod run;
mod state;

pub use aggregate::{aggregate, aggregate_by, AggregateSeries};
pub use error::{EnsembleError, KernelError, TrajectoryError};
pub use pipeline::{FnStage, Stage, StepView, UpdatePipeline};
pub use rng::{derive_run_seed, SimRng};
pub use run::{
    run_monte_carlo, run_trajectory, step, sweep, Ensemble, EnsembleJob, MonteCarloSpec, StateRef,
    Trajectory,
};
pub use state::{Schema, SimState, VarId};

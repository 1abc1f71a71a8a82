use std::fmt;
use std::sync::Arc;

use crate::kernel::{KernelError, Schema, VarId};
use crate::Scalar;

/// Read access to the state during one step.
///
/// `prev` is the state at `t`; `current` is the state at `t + 1` as written
/// so far by the stages that ran earlier in the same step (and the carried
/// forward value of everything not yet written).
pub struct StepView<'a, S> {
    t: u64,
    prev: &'a [S],
    next: &'a [S],
}

impl<'a, S: Scalar> StepView<'a, S> {
    pub(crate) fn new(t: u64, prev: &'a [S], next: &'a [S]) -> Self {
        Self { t, prev, next }
    }

    /// Timestep being stepped from.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn prev(&self, id: VarId) -> S {
        self.prev[id.0]
    }

    pub fn current(&self, id: VarId) -> S {
        self.next[id.0]
    }
}

/// One state-update block.
///
/// `apply` must be a pure function of its arguments. It receives exactly
/// [`Stage::draws`] uniform variates in `(0, 1)` and pushes `(variable,
/// value)` pairs for variables listed in [`Stage::writes`].
pub trait Stage<S, P>: Send + Sync {
    fn name(&self) -> &str;

    fn writes(&self) -> &[VarId];

    fn draws(&self) -> usize {
        0
    }

    fn apply(
        &self,
        view: &StepView<'_, S>,
        params: &P,
        draws: &[S],
        out: &mut Vec<(VarId, S)>,
    ) -> Result<(), String>;
}

type StageFn<S, P> =
    dyn Fn(&StepView<'_, S>, &P, &[S], &mut Vec<(VarId, S)>) -> Result<(), String> + Send + Sync;

/// A [`Stage`] backed by a closure.
pub struct FnStage<S, P> {
    name: String,
    writes: Vec<VarId>,
    draws: usize,
    f: Box<StageFn<S, P>>,
}

impl<S, P> FnStage<S, P> {
    pub fn new<F>(name: impl Into<String>, writes: Vec<VarId>, draws: usize, f: F) -> Self
    where
        F: Fn(&StepView<'_, S>, &P, &[S], &mut Vec<(VarId, S)>) -> Result<(), String>
            + Send
            + Sync
            + 'static,
    {
        Self {
            name: name.into(),
            writes,
            draws,
            f: Box::new(f),
        }
    }
}

impl<S: Scalar, P> Stage<S, P> for FnStage<S, P> {
    fn name(&self) -> &str {
        &self.name
    }

    fn writes(&self) -> &[VarId] {
        &self.writes
    }

    fn draws(&self) -> usize {
        self.draws
    }

    fn apply(
        &self,
        view: &StepView<'_, S>,
        params: &P,
        draws: &[S],
        out: &mut Vec<(VarId, S)>,
    ) -> Result<(), String> {
        (self.f)(view, params, draws, out)
    }
}

/// Ordered list of stages over a fixed schema.
pub struct UpdatePipeline<S, P> {
    schema: Arc<Schema>,
    stages: Vec<Box<dyn Stage<S, P>>>,
    // owner[i] = index of the stage that writes variable i
    owner: Vec<Option<usize>>,
    draws_per_step: usize,
}

impl<S: Scalar, P> UpdatePipeline<S, P> {
    pub fn new(schema: Arc<Schema>) -> Self {
        let owner = vec![None; schema.len()];
        Self {
            schema,
            stages: Vec::new(),
            owner,
            draws_per_step: 0,
        }
    }

    /// Appends a stage. Rejects writes outside the schema and variables
    /// already owned by an earlier stage.
    pub fn push(&mut self, stage: impl Stage<S, P> + 'static) -> Result<(), KernelError> {
        let idx = self.stages.len();
        for &var in stage.writes() {
            if var.0 >= self.schema.len() {
                return Err(KernelError::WriteOutOfSchema {
                    stage: stage.name().to_string(),
                    index: var.0,
                });
            }
            if let Some(prev) = self.owner[var.0] {
                // a stage listing the same variable twice is also a conflict
                return Err(KernelError::ConflictingWriters {
                    var: self.schema.name(var).to_string(),
                    first: self
                        .stages
                        .get(prev)
                        .map_or_else(|| stage.name().to_string(), |s| s.name().to_string()),
                    second: stage.name().to_string(),
                });
            }
            self.owner[var.0] = Some(idx);
        }
        self.draws_per_step += stage.draws();
        self.stages.push(Box::new(stage));
        Ok(())
    }

    pub fn with(mut self, stage: impl Stage<S, P> + 'static) -> Result<Self, KernelError> {
        self.push(stage)?;
        Ok(self)
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn stage_names(&self) -> Vec<&str> {
        self.stages.iter().map(|s| s.name()).collect()
    }

    /// Number of uniform variates consumed from the run's stream per step.
    pub fn draws_per_step(&self) -> usize {
        self.draws_per_step
    }

    pub(crate) fn stages(&self) -> &[Box<dyn Stage<S, P>>] {
        &self.stages
    }
}

impl<S: Scalar, P> fmt::Debug for UpdatePipeline<S, P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UpdatePipeline")
            .field("schema", &self.schema.names())
            .field("stages", &self.stage_names())
            .field("draws_per_step", &self.draws_per_step)
            .finish()
    }
}

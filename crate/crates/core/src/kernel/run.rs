use std::collections::HashSet;
use std::sync::Arc;

use rayon::prelude::*;

use crate::kernel::{
    derive_run_seed, EnsembleError, KernelError, Schema, SimRng, SimState, StepView,
    TrajectoryError, UpdatePipeline, VarId,
};
use crate::Scalar;

/// Reusable buffers for stepping one trajectory.
struct Stepper<S> {
    draws: Vec<S>,
    writes: Vec<(VarId, S)>,
}

impl<S: Scalar> Stepper<S> {
    fn new<P>(pipeline: &UpdatePipeline<S, P>) -> Self {
        Self {
            draws: Vec::with_capacity(pipeline.draws_per_step()),
            writes: Vec::with_capacity(8),
        }
    }

    fn step_into<P>(
        &mut self,
        pipeline: &UpdatePipeline<S, P>,
        params: &P,
        t: u64,
        prev: &[S],
        next: &mut [S],
        rng: &mut SimRng,
    ) -> Result<(), KernelError> {
        next.copy_from_slice(prev);
        self.draws.clear();
        for _ in 0..pipeline.draws_per_step() {
            self.draws.push(S::lit(rng.next_open01()));
        }
        let schema = pipeline.schema();
        let mut offset = 0;
        for stage in pipeline.stages() {
            let n = stage.draws();
            let draws = &self.draws[offset..offset + n];
            offset += n;
            self.writes.clear();
            stage
                .apply(
                    &StepView::new(t, prev, next),
                    params,
                    draws,
                    &mut self.writes,
                )
                .map_err(|message| KernelError::Stage {
                    stage: stage.name().to_string(),
                    message,
                })?;
            for &(var, value) in &self.writes {
                if !stage.writes().contains(&var) {
                    return Err(KernelError::UndeclaredWrite {
                        stage: stage.name().to_string(),
                        var: schema
                            .names()
                            .get(var.0)
                            .cloned()
                            .unwrap_or_else(|| format!("#{}", var.0)),
                    });
                }
                if !value.is_finite() {
                    return Err(KernelError::NonFinite {
                        stage: stage.name().to_string(),
                        var: schema.name(var).to_string(),
                        value: value.to_string(),
                    });
                }
                next[var.0] = value;
            }
        }
        Ok(())
    }
}

/// Advances `state` by one timestep.
///
/// Consumes exactly `pipeline.draws_per_step()` variates from `rng`.
pub fn step<S: Scalar, P>(
    state: &SimState<S>,
    pipeline: &UpdatePipeline<S, P>,
    params: &P,
    rng: &mut SimRng,
) -> Result<SimState<S>, KernelError> {
    let state = state.conform(pipeline.schema())?;
    let mut next = state.values().to_vec();
    Stepper::new(pipeline).step_into(
        pipeline,
        params,
        state.t(),
        state.values(),
        &mut next,
        rng,
    )?;
    SimState::new(Arc::clone(pipeline.schema()), state.t() + 1, next)
}

/// Borrowed view of one recorded state.
#[derive(Debug, Clone, Copy)]
pub struct StateRef<'a, S> {
    pub t: u64,
    pub schema: &'a Schema,
    pub values: &'a [S],
}

impl<S: Scalar> StateRef<'_, S> {
    pub fn value(&self, id: VarId) -> S {
        self.values[id.0]
    }

    pub fn get(&self, name: &str) -> Option<S> {
        self.schema.id(name).map(|id| self.values[id.0])
    }
}

/// One seeded run: `horizon + 1` states starting with the initial state.
///
/// States are stored row-major in a single buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    run_id: u64,
    seed: u64,
    schema: Arc<Schema>,
    t0: u64,
    len: usize,
    data: Vec<S>,
}

impl<S: Scalar> Trajectory<S> {
    pub fn run_id(&self) -> u64 {
        self.run_id
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    /// Number of recorded states (`horizon + 1`).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> u64 {
        self.len() as u64 - 1
    }

    pub fn t0(&self) -> u64 {
        self.t0
    }

    pub fn state(&self, index: usize) -> StateRef<'_, S> {
        let w = self.schema.len();
        StateRef {
            t: self.t0 + index as u64,
            schema: &self.schema,
            values: &self.data[index * w..(index + 1) * w],
        }
    }

    pub fn states(&self) -> impl Iterator<Item = StateRef<'_, S>> + '_ {
        (0..self.len()).map(move |i| self.state(i))
    }

    pub fn to_state(&self, index: usize) -> SimState<S> {
        let r = self.state(index);
        SimState::new(Arc::clone(&self.schema), r.t, r.values.to_vec())
            .expect("trajectory rows match schema width")
    }

    pub fn last(&self) -> StateRef<'_, S> {
        self.state(self.len() - 1)
    }

    pub fn value(&self, index: usize, id: VarId) -> S {
        self.data[index * self.schema.len() + id.0]
    }

    /// Time series of one variable.
    pub fn series(&self, id: VarId) -> Vec<S> {
        (0..self.len()).map(|i| self.value(i, id)).collect()
    }

    pub fn series_by_name(&self, name: &str) -> Result<Vec<S>, KernelError> {
        Ok(self.series(self.schema.require(name)?))
    }
}

fn run_trajectory_inner<S: Scalar, P>(
    initial: &SimState<S>,
    pipeline: &UpdatePipeline<S, P>,
    params: &P,
    horizon: u64,
    seed: u64,
    run_id: u64,
) -> Result<Trajectory<S>, TrajectoryError> {
    let initial = initial
        .conform(pipeline.schema())
        .map_err(|source| TrajectoryError {
            t: initial.t(),
            source,
        })?;
    let w = pipeline.schema().len();
    let steps = horizon as usize;
    let mut data = Vec::with_capacity(w * (steps + 1));
    data.extend_from_slice(initial.values());
    let mut rng = SimRng::new(seed);
    let mut stepper = Stepper::new(pipeline);
    let mut next = vec![S::zero(); w];
    for k in 0..steps {
        let t = initial.t() + k as u64;
        let prev = &data[k * w..(k + 1) * w];
        stepper
            .step_into(pipeline, params, t, prev, &mut next, &mut rng)
            .map_err(|source| TrajectoryError { t, source })?;
        data.extend_from_slice(&next);
    }
    Ok(Trajectory {
        run_id,
        seed,
        schema: Arc::clone(pipeline.schema()),
        t0: initial.t(),
        len: steps + 1,
        data,
    })
}

/// Runs `horizon` steps from `initial` with the stream keyed by `seed`.
pub fn run_trajectory<S: Scalar, P>(
    initial: &SimState<S>,
    pipeline: &UpdatePipeline<S, P>,
    params: &P,
    horizon: u64,
    seed: u64,
) -> Result<Trajectory<S>, TrajectoryError> {
    run_trajectory_inner(initial, pipeline, params, horizon, seed, 0)
}

/// Shape of a Monte Carlo ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarloSpec {
    pub horizon: u64,
    pub runs: u64,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble<S> {
    scenario_id: String,
    trajectories: Vec<Trajectory<S>>,
}

impl<S: Scalar> Ensemble<S> {
    pub fn new(
        scenario_id: impl Into<String>,
        trajectories: Vec<Trajectory<S>>,
    ) -> Result<Self, KernelError> {
        let first = trajectories.first().ok_or(KernelError::NoRuns)?;
        for tr in &trajectories[1..] {
            if tr.schema != first.schema || tr.len() != first.len() || tr.t0 != first.t0 {
                return Err(KernelError::ShapeMismatch(format!(
                    "run {} differs from run {}",
                    tr.run_id, first.run_id
                )));
            }
        }
        Ok(Self {
            scenario_id: scenario_id.into(),
            trajectories,
        })
    }

    pub fn scenario_id(&self) -> &str {
        &self.scenario_id
    }

    pub fn trajectories(&self) -> &[Trajectory<S>] {
        &self.trajectories
    }

    pub fn runs(&self) -> usize {
        self.trajectories.len()
    }

    pub fn schema(&self) -> &Arc<Schema> {
        self.trajectories[0].schema()
    }

    pub fn len(&self) -> usize {
        self.trajectories[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t0(&self) -> u64 {
        self.trajectories[0].t0()
    }
}

/// Runs `spec.runs` trajectories in parallel. Run `k` uses
/// `derive_run_seed(spec.master_seed, k)`; the result does not depend on
/// the number of worker threads. If several runs fail, the error of the
/// lowest run id is reported.
pub fn run_monte_carlo<S: Scalar, P: Sync>(
    scenario_id: &str,
    initial: &SimState<S>,
    pipeline: &UpdatePipeline<S, P>,
    params: &P,
    spec: MonteCarloSpec,
) -> Result<Ensemble<S>, EnsembleError> {
    if spec.runs == 0 {
        return Err(EnsembleError::Setup {
            scenario: scenario_id.to_string(),
            source: KernelError::NoRuns,
        });
    }
    let results: Vec<_> = (0..spec.runs)
        .into_par_iter()
        .map(|run_id| {
            let seed = derive_run_seed(spec.master_seed, run_id);
            run_trajectory_inner(initial, pipeline, params, spec.horizon, seed, run_id).map_err(
                |e| EnsembleError::Run {
                    scenario: scenario_id.to_string(),
                    run_id,
                    t: e.t,
                    source: e.source,
                },
            )
        })
        .collect();
    let trajectories = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ensemble::new(scenario_id, trajectories).map_err(|source| EnsembleError::Setup {
        scenario: scenario_id.to_string(),
        source,
    })
}

/// Something a sweep can run: one scenario producing one ensemble.
pub trait EnsembleJob<S>: Sync {
    fn id(&self) -> &str;
    fn run(&self) -> Result<Ensemble<S>, EnsembleError>;
}

/// Runs every job, possibly concurrently, and returns results in input
/// order. A failing job does not stop the others.
pub fn sweep<S, J>(jobs: &[J]) -> Result<Vec<Result<Ensemble<S>, EnsembleError>>, KernelError>
where
    S: Scalar,
    J: EnsembleJob<S>,
{
    let mut seen = HashSet::new();
    for job in jobs {
        if !seen.insert(job.id()) {
            return Err(KernelError::DuplicateScenario(job.id().to_string()));
        }
    }
    Ok(jobs.par_iter().map(|job| job.run()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::FnStage;

    fn schema(names: &[&str]) -> Arc<Schema> {
        Arc::new(Schema::new(names.iter().copied()).unwrap())
    }

    fn halving() -> UpdatePipeline<f64, ()> {
        let s = schema(&["A", "B"]);
        let a = s.id("A").unwrap();
        UpdatePipeline::new(s)
            .with(FnStage::new(
                "halve A",
                vec![a],
                0,
                move |v, _: &(), _, out| {
                    out.push((a, v.prev(a) / 2.0));
                    Ok(())
                },
            ))
            .unwrap()
    }

    #[test]
    fn identity_pipeline_only_advances_time() {
        let p: UpdatePipeline<f64, ()> = UpdatePipeline::new(schema(&["A", "U"]));
        let s = SimState::from_pairs(4, [("A", 3.5), ("U", -1.0)]).unwrap();
        let n = step(&s, &p, &(), &mut SimRng::new(0)).unwrap();
        assert_eq!(n.t(), 5);
        assert_eq!(n.values(), s.values());
    }

    #[test]
    fn single_stage_halves() {
        let p = halving();
        let s = SimState::from_pairs(0, [("A", 100.0), ("B", 7.0)]).unwrap();
        let n = step(&s, &p, &(), &mut SimRng::new(0)).unwrap();
        assert_eq!(n.get("A"), Some(50.0));
        assert_eq!(n.get("B"), Some(7.0));
        assert_eq!(n.t(), 1);
        // input untouched
        assert_eq!(s.get("A"), Some(100.0));
    }

    #[test]
    fn missing_variable_is_config_error() {
        let p = halving();
        let s = SimState::from_pairs(0, [("A", 1.0)]).unwrap();
        let err = step(&s, &p, &(), &mut SimRng::new(0)).unwrap_err();
        assert_eq!(err, KernelError::MissingVariable("B".into()));
        assert!(!err.is_divergence());
    }

    #[test]
    fn non_finite_names_the_stage() {
        let s = schema(&["A"]);
        let a = s.id("A").unwrap();
        let p = UpdatePipeline::new(s)
            .with(FnStage::new(
                "blow up",
                vec![a],
                0,
                move |v, _: &(), _, out| {
                    out.push((a, v.prev(a) / 0.0));
                    Ok(())
                },
            ))
            .unwrap();
        let init = SimState::from_pairs(0, [("A", 1.0)]).unwrap();
        let err = run_trajectory(&init, &p, &(), 5, 1).unwrap_err();
        assert_eq!(err.t, 0);
        match err.source {
            KernelError::NonFinite { stage, var, .. } => {
                assert_eq!(stage, "blow up");
                assert_eq!(var, "A");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn conflicting_writers_rejected() {
        let s = schema(&["A"]);
        let a = s.id("A").unwrap();
        let mut p: UpdatePipeline<f64, ()> = UpdatePipeline::new(s);
        p.push(FnStage::new("one", vec![a], 0, |_, _, _, _| Ok(())))
            .unwrap();
        let err = p
            .push(FnStage::new("two", vec![a], 0, |_, _, _, _| Ok(())))
            .unwrap_err();
        assert_eq!(
            err,
            KernelError::ConflictingWriters {
                var: "A".into(),
                first: "one".into(),
                second: "two".into()
            }
        );
    }

    #[test]
    fn undeclared_write_rejected() {
        let s = schema(&["A", "B"]);
        let (a, b) = (s.id("A").unwrap(), s.id("B").unwrap());
        let p = UpdatePipeline::new(s)
            .with(FnStage::new(
                "sneaky",
                vec![a],
                0,
                move |_, _: &(), _, out| {
                    out.push((b, 1.0));
                    Ok(())
                },
            ))
            .unwrap();
        let init = SimState::from_pairs(0, [("A", 1.0), ("B", 0.0)]).unwrap();
        let err = step(&init, &p, &(), &mut SimRng::new(0)).unwrap_err();
        assert!(matches!(err, KernelError::UndeclaredWrite { .. }));
    }

    #[test]
    fn draw_budget_is_exact() {
        let s = schema(&["X", "Y"]);
        let (x, y) = (s.id("X").unwrap(), s.id("Y").unwrap());
        let p = UpdatePipeline::new(s)
            .with(FnStage::new("x", vec![x], 2, move |_, _: &(), d, out| {
                assert_eq!(d.len(), 2);
                out.push((x, d[0] + d[1]));
                Ok(())
            }))
            .unwrap()
            .with(FnStage::new("y", vec![y], 1, move |_, _: &(), d, out| {
                assert_eq!(d.len(), 1);
                out.push((y, d[0]));
                Ok(())
            }))
            .unwrap();
        assert_eq!(p.draws_per_step(), 3);
        let init = SimState::from_pairs(0, [("X", 0.0), ("Y", 0.0)]).unwrap();
        let mut rng = SimRng::new(11);
        step(&init, &p, &(), &mut rng).unwrap();
        let mut reference = SimRng::new(11);
        for _ in 0..3 {
            reference.next_u64();
        }
        assert_eq!(rng.next_u64(), reference.next_u64());
    }

    #[test]
    fn horizon_zero_keeps_initial_only() {
        let p = halving();
        let init = SimState::from_pairs(0, [("A", 8.0), ("B", 1.0)]).unwrap();
        let tr = run_trajectory(&init, &p, &(), 0, 3).unwrap();
        assert_eq!(tr.len(), 1);
        assert_eq!(tr.state(0).values, init.values());
    }

    #[test]
    fn later_stage_sees_earlier_write() {
        let s = schema(&["A", "B"]);
        let (a, b) = (s.id("A").unwrap(), s.id("B").unwrap());
        let p = UpdatePipeline::new(s)
            .with(FnStage::new("a", vec![a], 0, move |v, _: &(), _, out| {
                out.push((a, v.prev(a) + 1.0));
                Ok(())
            }))
            .unwrap()
            .with(FnStage::new("b", vec![b], 0, move |v, _: &(), _, out| {
                out.push((b, v.current(a) * 10.0));
                Ok(())
            }))
            .unwrap();
        let init = SimState::from_pairs(0, [("A", 1.0), ("B", 0.0)]).unwrap();
        let n = step(&init, &p, &(), &mut SimRng::new(0)).unwrap();
        assert_eq!(n.values(), &[2.0, 20.0]);
    }

    #[test]
    fn zero_runs_rejected() {
        let p = halving();
        let init = SimState::from_pairs(0, [("A", 8.0), ("B", 1.0)]).unwrap();
        let spec = MonteCarloSpec {
            horizon: 3,
            runs: 0,
            master_seed: 1,
        };
        assert!(run_monte_carlo("x", &init, &p, &(), spec).is_err());
    }
}

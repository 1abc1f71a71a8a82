use serde::Serialize;

use crate::kernel::{Ensemble, KernelError, StateRef};
use crate::Scalar;

/// Per-timestep cross-run statistics of one variable.
///
/// `std` is the sample standard deviation (divisor `n - 1`, zero for a
/// single run). Sums run over trajectories in ascending run id; a step at
/// which every run agrees has that value as its mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateSeries<S> {
    pub variable: String,
    pub t0: u64,
    pub runs: usize,
    pub mean: Vec<S>,
    pub std: Vec<S>,
    pub min: Vec<S>,
    pub max: Vec<S>,
}

impl<S: Scalar> AggregateSeries<S> {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn last_mean(&self) -> S {
        *self.mean.last().expect("aggregate series is never empty")
    }

    /// Standard error of the mean at step `index`.
    pub fn std_error(&self, index: usize) -> S {
        self.std[index] / S::from_count(self.runs).sqrt()
    }
}

/// Aggregates a schema variable across the runs of `ensemble`.
pub fn aggregate<S: Scalar>(
    ensemble: &Ensemble<S>,
    variable: &str,
) -> Result<AggregateSeries<S>, KernelError> {
    let id = ensemble.schema().require(variable)?;
    Ok(aggregate_by(ensemble, variable, |s| s.value(id)))
}

/// Aggregates a quantity derived from each recorded state.
pub fn aggregate_by<S, F>(ensemble: &Ensemble<S>, label: &str, f: F) -> AggregateSeries<S>
where
    S: Scalar,
    F: Fn(&StateRef<'_, S>) -> S,
{
    let runs = ensemble.trajectories();
    let n = S::from_count(runs.len());
    let len = ensemble.len();
    let mut mean = Vec::with_capacity(len);
    let mut std = Vec::with_capacity(len);
    let mut min = Vec::with_capacity(len);
    let mut max = Vec::with_capacity(len);
    let mut column = Vec::with_capacity(runs.len());
    for i in 0..len {
        column.clear();
        column.extend(runs.iter().map(|tr| f(&tr.state(i))));
        let lo = column.iter().copied().fold(S::infinity(), S::min);
        let hi = column.iter().copied().fold(S::neg_infinity(), S::max);
        // identical runs aggregate to their common value exactly
        let m = if lo == hi {
            lo
        } else {
            column.iter().fold(S::zero(), |acc, &v| acc + v) / n
        };
        let sd = if runs.len() > 1 {
            let ss = column
                .iter()
                .fold(S::zero(), |acc, &v| acc + (v - m) * (v - m));
            (ss / (n - S::one())).sqrt()
        } else {
            S::zero()
        };
        mean.push(m);
        std.push(sd);
        min.push(lo);
        max.push(hi);
    }
    AggregateSeries {
        variable: label.to_string(),
        t0: ensemble.t0(),
        runs: runs.len(),
        mean,
        std,
        min,
        max,
    }
}

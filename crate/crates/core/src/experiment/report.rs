use std::collections::BTreeMap;

use serde::Serialize;

use crate::experiment::{ExperimentError, ScenarioSpec};
use crate::kernel::{aggregate, aggregate_by, AggregateSeries, Ensemble};
use crate::model::vars;
use crate::Scalar;

/// Derived series `T * price`, present when the price proxy is on.
pub const TREASURY_VALUE: &str = "treasury_value";

/// Aggregated series of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSummary<S> {
    pub id: String,
    pub runs: usize,
    pub series: Vec<AggregateSeries<S>>,
}

impl<S: Scalar> ScenarioSummary<S> {
    pub fn get(&self, variable: &str) -> Option<&AggregateSeries<S>> {
        self.series.iter().find(|s| s.variable == variable)
    }

    pub fn require(&self, variable: &str) -> Result<&AggregateSeries<S>, ExperimentError> {
        self.get(variable)
            .ok_or_else(|| ExperimentError::MissingSeries {
                scenario: self.id.clone(),
                variable: variable.to_string(),
            })
    }

    /// A0, read back from the pool series at its first step.
    pub fn initial_pool(&self) -> Result<S, ExperimentError> {
        Ok(self.require(vars::POOL)?.mean[0])
    }

    pub fn t0(&self) -> u64 {
        self.series.first().map_or(0, |s| s.t0)
    }

    pub fn len(&self) -> usize {
        self.series.first().map_or(0, |s| s.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Aggregates every schema variable of `ensemble`, plus `treasury_value`
/// when the price proxy is enabled.
pub fn summarize<S: Scalar>(ensemble: &Ensemble<S>) -> Result<ScenarioSummary<S>, ExperimentError> {
    let schema = ensemble.schema();
    let mut series = schema
        .names()
        .iter()
        .map(|name| aggregate(ensemble, name))
        .collect::<Result<Vec<_>, _>>()?;
    if let (Some(t), Some(p)) = (schema.id(vars::TREASURY), schema.id(vars::PRICE)) {
        series.push(aggregate_by(ensemble, TREASURY_VALUE, |s| {
            s.value(t) * s.value(p)
        }));
    }
    Ok(ScenarioSummary {
        id: ensemble.scenario_id().to_string(),
        runs: ensemble.runs(),
        series,
    })
}

/// Result of one ordering check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum Outcome {
    Holds,
    Violated {
        at_t: u64,
    },
    /// Every scenario has the same value at every checked step.
    DegenerateEqual,
    NotApplicable,
}

impl Outcome {
    pub fn holds(self) -> bool {
        self == Outcome::Holds
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub name: &'static str,
    pub description: &'static str,
    /// Inclusive `[first, last]` timesteps compared.
    pub t_range: (u64, u64),
    #[serde(flatten)]
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdicts {
    pub pool_ordered: Verdict,
    pub cumulative_outlay_ordered: Verdict,
    pub treasury_inverse: Verdict,
    pub treasury_value_ordered: Verdict,
}

impl Verdicts {
    pub fn iter(&self) -> impl Iterator<Item = &Verdict> {
        [
            &self.pool_ordered,
            &self.cumulative_outlay_ordered,
            &self.treasury_inverse,
            &self.treasury_value_ordered,
        ]
        .into_iter()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Increasing,
    Decreasing,
}

/// Checks that `series[k][i]` is strictly monotone in `k` for every `i` in
/// `range` (indices into the series).
fn check_order<S: Scalar>(
    series: &[&[S]],
    range: std::ops::RangeInclusive<usize>,
    t0: u64,
    direction: Direction,
) -> Outcome {
    let all_equal = range
        .clone()
        .all(|i| series.windows(2).all(|w| w[0][i] == w[1][i]));
    if all_equal {
        return Outcome::DegenerateEqual;
    }
    for i in range {
        let ordered = series.windows(2).all(|w| match direction {
            Direction::Increasing => w[0][i] < w[1][i],
            Direction::Decreasing => w[0][i] > w[1][i],
        });
        if !ordered {
            return Outcome::Violated {
                at_t: t0 + i as u64,
            };
        }
    }
    Outcome::Holds
}

fn sorted_by_pool<S: Scalar>(
    summaries: &[ScenarioSummary<S>],
) -> Result<Vec<&ScenarioSummary<S>>, ExperimentError> {
    if summaries.len() < 2 {
        return Err(ExperimentError::TooFewScenarios {
            needed: 2,
            got: summaries.len(),
        });
    }
    let mut keyed = summaries
        .iter()
        .map(|s| Ok((s.initial_pool()?, s)))
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite pools"));
    for w in keyed.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(ExperimentError::DuplicatePool {
                first: w[0].1.id.clone(),
                second: w[1].1.id.clone(),
            });
        }
    }
    Ok(keyed.into_iter().map(|(_, s)| s).collect())
}

fn means<'a, S: Scalar>(
    sorted: &[&'a ScenarioSummary<S>],
    variable: &str,
) -> Result<Vec<&'a [S]>, ExperimentError> {
    let out = sorted
        .iter()
        .map(|s| s.require(variable).map(|a| a.mean.as_slice()))
        .collect::<Result<Vec<_>, _>>()?;
    if out.windows(2).any(|w| w[0].len() != w[1].len()) || out.iter().any(|m| m.is_empty()) {
        return Err(ExperimentError::LengthMismatch {
            variable: variable.to_string(),
        });
    }
    Ok(out)
}

/// Ordering checks across scenarios, sorted by initial pool size, on the
/// ensemble-mean series.
pub fn ordering_verdicts<S: Scalar>(
    summaries: &[ScenarioSummary<S>],
) -> Result<Verdicts, ExperimentError> {
    let sorted = sorted_by_pool(summaries)?;
    let t0 = sorted[0].t0();

    let pool = means(&sorted, vars::POOL)?;
    let last = pool[0].len() - 1;
    let t_last = t0 + last as u64;
    let pool_ordered = Verdict {
        name: "pool_ordered",
        description: "mean subsidy pool increases with initial pool size at every step",
        t_range: (t0, t_last),
        outcome: check_order(&pool, 0..=last, t0, Direction::Increasing),
    };

    let cumulative = means(&sorted, vars::CUMULATIVE_OUTLAY)?;
    // every scenario starts from zero paid out, so t0 itself is skipped
    let first = 1.min(last);
    let cumulative_outlay_ordered = Verdict {
        name: "cumulative_outlay_ordered",
        description: "mean cumulative outlay increases with initial pool size after t0",
        t_range: (t0 + first as u64, t_last),
        outcome: check_order(&cumulative, first..=last, t0, Direction::Increasing),
    };

    let treasury = means(&sorted, vars::TREASURY)?;
    let treasury_inverse = Verdict {
        name: "treasury_inverse",
        description: "terminal mean treasury decreases with initial pool size",
        t_range: (t_last, t_last),
        outcome: check_order(&treasury, last..=last, t0, Direction::Decreasing),
    };

    let has_value = sorted.iter().all(|s| s.get(TREASURY_VALUE).is_some());
    let treasury_value_ordered = Verdict {
        name: "treasury_value_ordered",
        description:
            "terminal mean treasury value (T * price proxy) increases with initial pool size",
        t_range: (t_last, t_last),
        outcome: if has_value {
            let value = means(&sorted, TREASURY_VALUE)?;
            check_order(&value, last..=last, t0, Direction::Increasing)
        } else {
            Outcome::NotApplicable
        },
    };

    Ok(Verdicts {
        pool_ordered,
        cumulative_outlay_ordered,
        treasury_inverse,
        treasury_value_ordered,
    })
}

/// `(max - min) / mean` of terminal developer incomes.
pub fn income_convergence_spread<S: Scalar>(incomes: &[S]) -> Result<S, ExperimentError> {
    if incomes.len() < 2 {
        return Err(ExperimentError::TooFewScenarios {
            needed: 2,
            got: incomes.len(),
        });
    }
    let max = incomes.iter().copied().fold(S::neg_infinity(), S::max);
    let min = incomes.iter().copied().fold(S::infinity(), S::min);
    if max == min {
        return Ok(S::zero());
    }
    let mean = incomes.iter().fold(S::zero(), |acc, &v| acc + v) / S::from_count(incomes.len());
    Ok((max - min) / mean)
}

/// Terminal ensemble means of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TerminalRow<S> {
    pub id: String,
    pub runs: usize,
    pub t: u64,
    pub means: BTreeMap<String, S>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossScenarioStats<S> {
    pub terminal: Vec<TerminalRow<S>>,
    /// Absent for a single-scenario sweep or when initial pools repeat.
    pub verdicts: Option<Verdicts>,
    pub income_convergence_spread: Option<S>,
}

/// Everything a sweep reports, recomputed from the summaries it holds.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport<S> {
    pub summaries: Vec<ScenarioSummary<S>>,
    pub stats: CrossScenarioStats<S>,
}

impl<S: Scalar> SweepReport<S> {
    /// Verdicts need at least two scenarios with distinct initial pools and
    /// are left out otherwise; the income spread needs two scenarios.
    pub fn from_summaries(summaries: Vec<ScenarioSummary<S>>) -> Result<Self, ExperimentError> {
        let terminal = summaries
            .iter()
            .map(|s| TerminalRow {
                id: s.id.clone(),
                runs: s.runs,
                t: s.t0() + s.len().saturating_sub(1) as u64,
                means: s
                    .series
                    .iter()
                    .map(|a| (a.variable.clone(), a.last_mean()))
                    .collect(),
            })
            .collect();
        let (verdicts, spread) = if summaries.len() >= 2 {
            let incomes = summaries
                .iter()
                .map(|s| s.require(vars::INCOME).map(|a| a.last_mean()))
                .collect::<Result<Vec<_>, _>>()?;
            let verdicts = match ordering_verdicts(&summaries) {
                Ok(v) => Some(v),
                Err(ExperimentError::DuplicatePool { .. }) => None,
                Err(e) => return Err(e),
            };
            (verdicts, Some(income_convergence_spread(&incomes)?))
        } else {
            (None, None)
        };
        Ok(Self {
            summaries,
            stats: CrossScenarioStats {
                terminal,
                verdicts,
                income_convergence_spread: spread,
            },
        })
    }

    /// Runs each scenario and builds the report. Ensembles are dropped once
    /// summarized.
    pub fn run(specs: &[ScenarioSpec<S>]) -> Result<Self, ExperimentError> {
        let summaries = crate::kernel::sweep(specs)?
            .into_iter()
            .map(|r| summarize(&r?))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_summaries(summaries)
    }
}

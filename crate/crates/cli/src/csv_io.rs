//! CSV output and input.
//!
//! `runs.csv` has one row per run and timestep with a fixed column set;
//! `price` is blank when the price proxy is off. `aggregate.csv` has one
//! row per timestep with `{var}_mean`, `{var}_std`, `{var}_min` and
//! `{var}_max` for every aggregated variable. Floats are written in their
//! shortest round-trip form, so reading a file back gives the exact values.

use std::path::Path;

use tokenflow_core::model::vars;
use tokenflow_core::{AggregateSeries, Ensemble, ScenarioSummary};

use crate::error::CliError;
use crate::fsutil::write_atomic;

/// Model columns of `runs.csv`, after `t` and `run_id`.
pub const PER_RUN_COLUMNS: [&str; 10] = [
    vars::POOL,
    vars::OUTLAY,
    vars::CUMULATIVE_OUTLAY,
    vars::APPS,
    vars::BETA,
    vars::INCOME,
    vars::FEE_ACCRUED,
    vars::TREASURY,
    vars::PRICE,
    vars::TREASURY_WARNING,
];

pub const STATS: [&str; 4] = ["mean", "std", "min", "max"];

fn num(v: f64) -> String {
    format!("{v}")
}

pub fn write_per_run(path: &Path, ensemble: &Ensemble<f64>) -> Result<(), CliError> {
    let schema = ensemble.schema();
    let ids: Vec<_> = PER_RUN_COLUMNS.iter().map(|c| schema.id(c)).collect();
    write_atomic(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t", "run_id"];
        header.extend(PER_RUN_COLUMNS);
        out.write_record(&header)?;
        let mut row: Vec<String> = Vec::with_capacity(header.len());
        for traj in ensemble.trajectories() {
            for state in traj.states() {
                row.clear();
                row.push(state.t.to_string());
                row.push(traj.run_id().to_string());
                for id in &ids {
                    row.push(id.map(|id| num(state.value(id))).unwrap_or_default());
                }
                out.write_record(&row)?;
            }
        }
        out.flush()?;
        Ok(())
    })
}

pub fn write_aggregate(path: &Path, summary: &ScenarioSummary<f64>) -> Result<(), CliError> {
    write_atomic(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["scenario".to_string(), "t".into(), "runs".into()];
        for s in &summary.series {
            header.extend(STATS.iter().map(|stat| format!("{}_{stat}", s.variable)));
        }
        out.write_record(&header)?;
        let runs = summary.runs.to_string();
        let mut row: Vec<String> = Vec::with_capacity(header.len());
        for i in 0..summary.len() {
            row.clear();
            row.push(summary.id.clone());
            row.push((summary.t0() + i as u64).to_string());
            row.push(runs.clone());
            for s in &summary.series {
                row.extend([s.mean[i], s.std[i], s.min[i], s.max[i]].map(num));
            }
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    })
}

/// A CSV file held as text cells.
#[derive(Debug, Clone)]
pub struct Table {
    pub origin: String,
    pub headers: Vec<String>,
    pub rows: Vec<csv::StringRecord>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let origin = path.display().to_string();
        let mut reader =
            csv::Reader::from_path(path).map_err(|e| CliError::config(format!("{origin}: {e}")))?;
        let headers = reader
            .headers()
            .map_err(|e| CliError::config(format!("{origin}: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = reader
            .records()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::config(format!("{origin}: {e}")))?;
        Ok(Self {
            origin,
            headers,
            rows,
        })
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn is_aggregate(&self) -> bool {
        self.column_index("scenario").is_some() && self.headers.iter().any(|h| h.ends_with("_mean"))
    }

    /// Numeric cells of column `name`; blank cells are `None`.
    pub fn column(&self, name: &str) -> Result<Vec<Option<f64>>, CliError> {
        let idx = self.column_index(name).ok_or_else(|| {
            CliError::config(format!(
                "{}: no column `{name}`; columns: {}",
                self.origin,
                self.headers.join(", ")
            ))
        })?;
        self.rows
            .iter()
            .enumerate()
            .map(|(r, rec)| {
                let cell = rec.get(idx).unwrap_or("").trim();
                if cell.is_empty() {
                    return Ok(None);
                }
                cell.parse::<f64>().map(Some).map_err(|_| {
                    CliError::config(format!(
                        "{}:{}: column `{name}`: not a number: `{cell}`",
                        self.origin,
                        r + 2
                    ))
                })
            })
            .collect()
    }

    /// Like [`Table::column`] but every cell must be present.
    pub fn dense_column(&self, name: &str) -> Result<Vec<f64>, CliError> {
        self.column(name)?
            .into_iter()
            .enumerate()
            .map(|(r, v)| {
                v.ok_or_else(|| {
                    CliError::config(format!(
                        "{}:{}: column `{name}` is blank",
                        self.origin,
                        r + 2
                    ))
                })
            })
            .collect()
    }

    /// Variables that have all four statistic columns.
    pub fn aggregate_variables(&self) -> Vec<String> {
        self.headers
            .iter()
            .filter_map(|h| h.strip_suffix("_mean"))
            .filter(|v| {
                STATS
                    .iter()
                    .all(|s| self.column_index(&format!("{v}_{s}")).is_some())
            })
            .map(str::to_string)
            .collect()
    }

    /// Rebuilds the scenario summary from an `aggregate.csv` table.
    pub fn to_summary(&self) -> Result<ScenarioSummary<f64>, CliError> {
        if !self.is_aggregate() {
            return Err(CliError::config(format!(
                "{}: not an aggregate file (needs `scenario` and `*_mean` columns)",
                self.origin
            )));
        }
        if self.rows.is_empty() {
            return Err(CliError::config(format!("{}: no rows", self.origin)));
        }
        let sidx = self.column_index("scenario").expect("checked above");
        let id = self.rows[0].get(sidx).unwrap_or("").to_string();
        if let Some(r) = self
            .rows
            .iter()
            .position(|rec| rec.get(sidx) != Some(id.as_str()))
        {
            return Err(CliError::config(format!(
                "{}:{}: more than one scenario in file",
                self.origin,
                r + 2
            )));
        }
        let t = self.dense_column("t")?;
        let t0 = t[0];
        if t.iter().enumerate().any(|(i, &v)| v != t0 + i as f64) || t0 < 0.0 || t0.fract() != 0.0 {
            return Err(CliError::config(format!(
                "{}: `t` must be consecutive whole steps",
                self.origin
            )));
        }
        let runs = self.dense_column("runs")?[0];
        if runs < 1.0 || runs.fract() != 0.0 {
            return Err(CliError::config(format!(
                "{}: bad `runs` value {runs}",
                self.origin
            )));
        }
        let series = self
            .aggregate_variables()
            .into_iter()
            .map(|v| {
                let col = |stat: &str| self.dense_column(&format!("{v}_{stat}"));
                Ok(AggregateSeries {
                    t0: t0 as u64,
                    runs: runs as usize,
                    mean: col("mean")?,
                    std: col("std")?,
                    min: col("min")?,
                    max: col("max")?,
                    variable: v,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(ScenarioSummary {
            id,
            runs: runs as usize,
            series,
        })
    }
}

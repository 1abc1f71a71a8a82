//! `report.txt` and `report.json`.

use std::fmt::Write;

use serde::Serialize;

use tokenflow_core::experiment::TREASURY_VALUE;
use tokenflow_core::model::vars;
use tokenflow_core::{CrossScenarioStats, Outcome, ScenarioSpec64, SweepReport};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioRecord {
    pub id: String,
    pub runs: u64,
    pub horizon: u64,
    pub master_seed: u64,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ScenarioRecord {
    pub fn new(spec: &ScenarioSpec64, error: Option<String>) -> Self {
        Self {
            id: spec.id.clone(),
            runs: spec.runs,
            horizon: spec.horizon,
            master_seed: spec.master_seed,
            status: if error.is_some() {
                Status::Failed
            } else {
                Status::Ok
            },
            error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDocument<'a> {
    pub scenarios: &'a [ScenarioRecord],
    #[serde(flatten)]
    pub stats: &'a CrossScenarioStats<f64>,
}

pub fn to_json(records: &[ScenarioRecord], report: &SweepReport<f64>) -> String {
    let doc = ReportDocument {
        scenarios: records,
        stats: &report.stats,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

const TERMINAL_COLUMNS: [&str; 7] = [
    vars::POOL,
    vars::CUMULATIVE_OUTLAY,
    vars::APPS,
    vars::INCOME,
    vars::TREASURY,
    vars::PRICE,
    TREASURY_VALUE,
];

pub fn outcome_label(o: Outcome) -> String {
    match o {
        Outcome::Holds => "holds".into(),
        Outcome::Violated { at_t } => format!("violated at t={at_t}"),
        Outcome::DegenerateEqual => "degenerate (all equal)".into(),
        Outcome::NotApplicable => "not applicable".into(),
    }
}

pub fn to_text(records: &[ScenarioRecord], report: &SweepReport<f64>) -> String {
    let mut out = String::new();
    let failed = records
        .iter()
        .filter(|r| r.status == Status::Failed)
        .count();
    let _ = writeln!(
        out,
        "scenarios: {} ({} ok, {failed} failed)",
        records.len(),
        records.len() - failed
    );
    for r in records {
        let _ = writeln!(
            out,
            "  {:<16} runs={:<5} horizon={:<6} seed={}{}",
            r.id,
            r.runs,
            r.horizon,
            r.master_seed,
            r.error
                .as_ref()
                .map(|e| format!("  FAILED: {e}"))
                .unwrap_or_default()
        );
    }

    let columns: Vec<&str> = TERMINAL_COLUMNS
        .iter()
        .copied()
        .filter(|c| {
            report
                .stats
                .terminal
                .iter()
                .any(|t| t.means.contains_key(*c))
        })
        .collect();
    if !report.stats.terminal.is_empty() {
        let _ = writeln!(out, "\nterminal ensemble means:");
        let _ = write!(out, "  {:<16} {:>6}", "scenario", "t");
        for c in &columns {
            let _ = write!(out, " {c:>17}");
        }
        out.push('\n');
        for row in &report.stats.terminal {
            let _ = write!(out, "  {:<16} {:>6}", row.id, row.t);
            for c in &columns {
                match row.means.get(*c) {
                    Some(v) => {
                        let _ = write!(out, " {v:>17.6e}");
                    }
                    None => {
                        let _ = write!(out, " {:>17}", "-");
                    }
                }
            }
            out.push('\n');
        }
    }

    if let Some(verdicts) = &report.stats.verdicts {
        let _ = writeln!(out, "\nordering checks:");
        for v in verdicts.iter() {
            let _ = writeln!(
                out,
                "  {:<26} {:<24} t={}..{}  {}",
                v.name,
                outcome_label(v.outcome),
                v.t_range.0,
                v.t_range.1,
                v.description
            );
        }
    }
    if let Some(spread) = report.stats.income_convergence_spread {
        let _ = writeln!(
            out,
            "\nincome convergence spread (max-min)/mean of terminal I: {spread:.6}"
        );
    }
    out
}

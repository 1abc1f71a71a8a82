use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use tokenflow_core::experiment::{summarize, TREASURY_VALUE};
use tokenflow_core::model::vars;
use tokenflow_core::{
    table3_scenarios, ParamOverrides, ScenarioSpec64, ScenarioSummary, SweepReport,
};

use crate::chart::{self, Panel, Series};
use crate::config::{self, OutputFormat, OutputSettings, ResolvedConfig, RunOverrides};
use crate::csv_io::{self, Table};
use crate::error::CliError;
use crate::fsutil::write_string;
use crate::report::{self, ScenarioRecord};

/// Subsidy-driven app token economy simulator.
#[derive(Debug, Parser)]
#[command(name = "tokenflow", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the scenarios of a scenario file.
    Run {
        file: PathBuf,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Run a sweep: the builtin `table3` pool-size sweep or a scenario file.
    Sweep {
        #[arg(default_value = "table3")]
        target: String,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Chart columns of aggregate or per-run CSV files as SVG.
    Plot {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        /// Variables to chart, comma separated.
        #[arg(long, value_delimiter = ',')]
        vars: Vec<String>,
        #[arg(long, default_value = "chart.svg")]
        out: PathBuf,
        /// Panels per row.
        #[arg(long, default_value_t = 1)]
        columns: usize,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunOptions {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub runs: Option<u64>,
    #[arg(long)]
    pub horizon: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Write every trajectory to `runs.csv` (always on for `run`).
    #[arg(long)]
    pub per_run: bool,
}

impl RunOptions {
    fn overrides(&self) -> RunOverrides {
        RunOverrides {
            seed: self.seed,
            runs: self.runs,
            horizon: self.horizon,
        }
    }
}

/// Runs the command, appending progress and summary lines to `lines`.
/// Lines are appended even when the command fails part way.
pub fn execute(cli: &Cli, lines: &mut Vec<String>) -> Result<(), CliError> {
    match &cli.command {
        Command::Run { file, opts } => {
            let resolved = load_file(file, opts)?;
            run_scenarios(resolved, opts, true, lines)
        }
        Command::Sweep { target, opts } => {
            let resolved = if target == "table3" {
                builtin_table3(opts)?
            } else {
                load_file(Path::new(target), opts)?
            };
            let per_run = resolved.output.per_run;
            run_scenarios(resolved, opts, per_run, lines)
        }
        Command::Plot {
            csv,
            vars,
            out,
            columns,
        } => plot(csv, vars, out, *columns, lines),
    }
}

fn load_file(path: &Path, opts: &RunOptions) -> Result<ResolvedConfig, CliError> {
    let (file, text) = config::load(path)?;
    config::resolve(
        &file,
        Some(&text),
        &path.display().to_string(),
        opts.overrides(),
    )
}

/// The builtin pool-size sweep.
pub fn builtin_table3(opts: &RunOptions) -> Result<ResolvedConfig, CliError> {
    let o = opts.overrides();
    if let Some(seed) = o.seed {
        if seed > i64::MAX as u64 {
            return Err(CliError::config(format!(
                "--seed {seed} exceeds the largest TOML integer {}",
                i64::MAX
            )));
        }
    }
    let mut scenarios = table3_scenarios(&ParamOverrides::<f64> {
        master_seed: o.seed,
        runs: o.runs,
        horizon: o.horizon,
        ..Default::default()
    })?;
    for s in &mut scenarios {
        s.model.initial_beta = Some(s.model.starting_beta());
    }
    Ok(ResolvedConfig {
        scenarios,
        output: OutputSettings {
            dir: "out/table3".into(),
            ..OutputSettings::default()
        },
    })
}

fn run_scenarios(
    resolved: ResolvedConfig,
    opts: &RunOptions,
    per_run_default: bool,
    lines: &mut Vec<String>,
) -> Result<(), CliError> {
    let dir = opts
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&resolved.output.dir));
    let format = opts.format.unwrap_or(resolved.output.format);
    let per_run = opts.per_run || per_run_default;
    for s in &resolved.scenarios {
        if s.id.is_empty() || s.id.contains(['/', '\\']) || s.id == "." || s.id == ".." {
            return Err(CliError::config(format!(
                "scenario id `{}` cannot be used as a directory name",
                s.id
            )));
        }
    }
    std::fs::create_dir_all(&dir)?;

    let mut effective = resolved.clone();
    effective.output = OutputSettings {
        dir: dir.display().to_string(),
        format,
        per_run,
    };
    let resolved_path = dir.join("resolved.toml");
    write_string(&resolved_path, &effective.to_toml())?;
    lines.push(format!("wrote {}", resolved_path.display()));

    let mut records = Vec::new();
    let mut summaries = Vec::new();
    let mut first_error: Option<CliError> = None;
    for spec in &resolved.scenarios {
        match run_one(spec, &dir, format, per_run, lines) {
            Ok(summary) => {
                records.push(ScenarioRecord::new(spec, None));
                summaries.push(summary);
            }
            Err(e) => {
                lines.push(format!("scenario `{}` failed: {e}", spec.id));
                records.push(ScenarioRecord::new(spec, Some(e.to_string())));
                first_error.get_or_insert(e);
            }
        }
    }

    let report = SweepReport::from_summaries(summaries)?;
    let json_path = dir.join("report.json");
    let txt_path = dir.join("report.txt");
    let text = report::to_text(&records, &report);
    write_string(&json_path, &report::to_json(&records, &report))?;
    write_string(&txt_path, &text)?;
    lines.push(format!("wrote {}", txt_path.display()));
    lines.push(format!("wrote {}", json_path.display()));
    if format == OutputFormat::CsvSvg && !report.summaries.is_empty() {
        for (name, vars) in SWEEP_CHARTS {
            let path = dir.join(name);
            write_string(&path, &sweep_chart(&report.summaries, vars))?;
            lines.push(format!("wrote {}", path.display()));
        }
    }
    lines.push(String::new());
    lines.extend(text.lines().map(str::to_string));

    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn run_one(
    spec: &ScenarioSpec64,
    dir: &Path,
    format: OutputFormat,
    per_run: bool,
    lines: &mut Vec<String>,
) -> Result<ScenarioSummary<f64>, CliError> {
    let ensemble = spec.run()?;
    let sdir = dir.join(&spec.id);
    std::fs::create_dir_all(&sdir)?;
    if per_run {
        let path = sdir.join("runs.csv");
        csv_io::write_per_run(&path, &ensemble)?;
        lines.push(format!("wrote {}", path.display()));
    }
    let summary = summarize(&ensemble)?;
    drop(ensemble);
    let path = sdir.join("aggregate.csv");
    csv_io::write_aggregate(&path, &summary)?;
    lines.push(format!("wrote {}", path.display()));
    if format == OutputFormat::CsvSvg {
        let path = sdir.join("chart.svg");
        write_string(&path, &scenario_chart(&summary))?;
        lines.push(format!("wrote {}", path.display()));
    }
    Ok(summary)
}

const CHART_VARS: [&str; 8] = [
    vars::POOL,
    vars::CUMULATIVE_OUTLAY,
    vars::APPS,
    vars::BETA,
    vars::INCOME,
    vars::TREASURY,
    vars::PRICE,
    TREASURY_VALUE,
];

fn mean_series(label: &str, s: &tokenflow_core::AggregateSeries<f64>, band: bool) -> Series {
    let x = |i: usize| (s.t0 + i as u64) as f64;
    Series {
        label: label.to_string(),
        points: s.mean.iter().enumerate().map(|(i, &m)| (x(i), m)).collect(),
        band: band.then(|| (0..s.len()).map(|i| (x(i), s.min[i], s.max[i])).collect()),
    }
}

/// One panel per variable: ensemble mean with the min..max envelope.
pub fn scenario_chart(summary: &ScenarioSummary<f64>) -> String {
    let panels: Vec<Panel> = CHART_VARS
        .iter()
        .filter_map(|v| summary.get(v))
        .map(|s| Panel {
            title: format!("{} ({})", s.variable, summary.id),
            x_label: "t (days)".into(),
            series: vec![mean_series("mean, min..max", s, true)],
        })
        .collect();
    chart::render(&panels, 2)
}

/// Cross-scenario charts: subsidy from the pool and to developers, then
/// developer income and treasury.
pub const SWEEP_CHARTS: [(&str, &[&str]); 2] = [
    (
        "pool_outlay.svg",
        &[vars::POOL, vars::CUMULATIVE_OUTLAY, vars::OUTLAY],
    ),
    (
        "income_treasury.svg",
        &[vars::INCOME, vars::TREASURY, TREASURY_VALUE],
    ),
];

/// One panel per variable present in every summary, one mean line per
/// scenario.
pub fn sweep_chart(summaries: &[ScenarioSummary<f64>], variables: &[&str]) -> String {
    let panels: Vec<Panel> = variables
        .iter()
        .filter(|v| summaries.iter().all(|s| s.get(v).is_some()))
        .map(|v| Panel {
            title: format!("{v}, ensemble mean"),
            x_label: "t (days)".into(),
            series: summaries
                .iter()
                .map(|s| mean_series(&s.id, s.get(v).expect("filtered"), false))
                .collect(),
        })
        .collect();
    chart::render(&panels, 2)
}

/// Names `plot --vars` accepts for `table`.
fn plottable(table: &Table) -> Vec<String> {
    if table.is_aggregate() {
        table.aggregate_variables()
    } else {
        table
            .headers
            .iter()
            .filter(|h| *h != "t" && *h != "run_id")
            .cloned()
            .collect()
    }
}

fn table_series(table: &Table, var: &str, stem: &str, band: bool) -> Result<Vec<Series>, CliError> {
    let t = table.dense_column("t")?;
    if table.is_aggregate() {
        let summary = table.to_summary()?;
        if let Some(s) = summary.get(var) {
            return Ok(vec![mean_series(&summary.id, s, band)]);
        }
        let ys = table.dense_column(var)?;
        return Ok(vec![Series {
            label: format!("{} {var}", summary.id),
            points: t.into_iter().zip(ys).collect(),
            band: None,
        }]);
    }
    let ys = table.column(var)?;
    if ys.iter().all(Option::is_none) {
        return Err(CliError::config(format!(
            "{}: column `{var}` is empty",
            table.origin
        )));
    }
    let runs = match table.column_index("run_id") {
        Some(_) => table.dense_column("run_id")?,
        None => vec![0.0; t.len()],
    };
    let mut by_run: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
    for ((&x, &r), y) in t.iter().zip(&runs).zip(&ys) {
        if let Some(y) = *y {
            by_run.entry(r as u64).or_default().push((x, y));
        }
    }
    Ok(by_run
        .into_iter()
        .map(|(r, points)| Series {
            label: format!("{stem} run {r}"),
            points,
            band: None,
        })
        .collect())
}

fn plot(
    files: &[PathBuf],
    vars: &[String],
    out: &Path,
    columns: usize,
    lines: &mut Vec<String>,
) -> Result<(), CliError> {
    let tables = files
        .iter()
        .map(|f| Table::read(f))
        .collect::<Result<Vec<_>, _>>()?;
    let vars: Vec<&str> = vars
        .iter()
        .map(|v| v.trim())
        .filter(|v| !v.is_empty())
        .collect();
    if vars.is_empty() {
        let mut available: Vec<String> = tables.iter().flat_map(plottable).collect();
        available.sort();
        available.dedup();
        return Err(CliError::config(format!(
            "no variables given; pass --vars with any of: {}",
            available.join(", ")
        )));
    }
    let mut panels = Vec::new();
    for var in vars {
        let mut series = Vec::new();
        for (table, file) in tables.iter().zip(files) {
            let stem = file
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            series.extend(table_series(table, var, &stem, tables.len() == 1)?);
        }
        panels.push(Panel {
            title: var.to_string(),
            x_label: "t (days)".into(),
            series,
        });
    }
    write_string(out, &chart::render(&panels, columns))?;
    lines.push(format!("wrote {}", out.display()));
    Ok(())
}

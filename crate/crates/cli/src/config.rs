//! Scenario files.
//!
//! A scenario file is TOML. Top-level `horizon`, `runs` and `master_seed`
//! and the `[model]` table are shared defaults; each `[[scenario]]` entry
//! names one scenario and may override any of them. Nested plug-in tables
//! (`retune`, `fee`, `noise`, `price`) given in a scenario replace the
//! shared one as a whole. Unknown keys are rejected everywhere. See
//! `scenarios/table3.toml` for a commented example.

use std::collections::HashSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use tokenflow_core::model::{FieldIssue, ModelError};
use tokenflow_core::{
    ExperimentError, FeeSpec, ModelParams64, NoiseSpec, PriceProxySpec, RetuneSpec, ScenarioSpec64,
    Stepping,
};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    #[serde(rename = "csv")]
    #[value(name = "csv")]
    Csv,
    #[serde(rename = "csv+svg")]
    #[value(name = "csv+svg")]
    CsvSvg,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Spanned<ModelSection>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scenario: Vec<Spanned<ScenarioSection>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_run: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_pool: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_apps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revenue_per_app: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_treasury: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retune_every: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stepping: Option<SteppingName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retune: Option<RetuneSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fee: Option<FeeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price: Option<PriceSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SteppingName {
    Exact,
    Euler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RetuneSection {
    Saturating {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta_min: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta_max: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        half_saturation: Option<f64>,
    },
    Constant {
        beta: f64,
    },
    Table {
        points: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FeeSection {
    Off,
    PerApp { rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseSection {
    Off,
    MultiplicativeGrowth {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PriceSection {
    Off,
    Proxy {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base_price: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        elasticity: Option<f64>,
    },
}

/// Output settings after defaults.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputSettings {
    pub dir: String,
    pub format: OutputFormat,
    pub per_run: bool,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            format: OutputFormat::Csv,
            per_run: false,
        }
    }
}

/// Fully resolved configuration: every scenario with every parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub scenarios: Vec<ScenarioSpec64>,
    pub output: OutputSettings,
}

/// Command-line overrides applied after file resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub runs: Option<u64>,
    pub horizon: Option<u64>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

/// Parses scenario-file text. Errors carry `origin:line:col`.
pub fn parse(text: &str, origin: &str) -> Result<ScenarioFile, CliError> {
    toml::from_str(text).map_err(|e| {
        let at = e
            .span()
            .map(|s| {
                let (l, c) = line_col(text, s.start);
                format!("{origin}:{l}:{c}")
            })
            .unwrap_or_else(|| origin.to_string());
        CliError::config(format!("{at}: {}", e.message().trim_end()))
    })
}

pub fn load(path: &std::path::Path) -> Result<(ScenarioFile, String), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let file = parse(&text, &path.display().to_string())?;
    Ok((file, text))
}

/// Where resolution errors point to.
struct Anchor<'a> {
    text: Option<&'a str>,
    origin: &'a str,
}

impl Anchor<'_> {
    /// `origin:line` for `key` inside `span`, else for the start of `span`.
    fn locate(&self, spans: &[Range<usize>], key: Option<&str>) -> String {
        let Some(text) = self.text else {
            return self.origin.to_string();
        };
        if let Some(key) = key {
            for span in spans {
                let body = &text[span.clone()];
                let mut offset = 0;
                for line in body.split_inclusive('\n') {
                    let assigned = line
                        .split_once('=')
                        .map(|(lhs, _)| lhs.rsplit('.').next().unwrap_or(lhs).trim());
                    if !line.trim_start().starts_with('[') && assigned == Some(key) {
                        return format!(
                            "{}:{}",
                            self.origin,
                            line_col(text, span.start + offset).0
                        );
                    }
                    offset += line.len();
                }
            }
        }
        match spans.first() {
            Some(s) => format!("{}:{}", self.origin, line_col(text, s.start).0),
            None => self.origin.to_string(),
        }
    }
}

/// Byte range of the table whose header starts at `start`, including its
/// `name.*` subtables.
fn table_region(text: &str, start: usize, name: &str) -> Range<usize> {
    let dotted = format!("{name}.");
    let mut offset = start;
    let mut first = true;
    for line in text[start..].split_inclusive('\n') {
        let header = line.trim_start();
        if !first && header.starts_with('[') {
            let inner = header.trim_start_matches('[').trim_start();
            if !inner.starts_with(&dotted) {
                return start..offset;
            }
        }
        first = false;
        offset += line.len();
    }
    start..offset
}

fn overlay(base: &ModelSection, top: &ModelSection) -> ModelSection {
    macro_rules! pick {
        ($($f:ident),*) => {
            ModelSection { $($f: top.$f.clone().or_else(|| base.$f.clone()),)* }
        };
    }
    pick!(
        initial_pool,
        decay_rate,
        initial_apps,
        initial_beta,
        revenue_per_app,
        initial_treasury,
        retune_every,
        stepping,
        retune,
        fee,
        noise,
        price
    )
}

fn model_params(section: &ModelSection) -> ModelParams64 {
    let d = ModelParams64::default();
    let retune = match &section.retune {
        None => d.retune.clone(),
        Some(RetuneSection::Saturating {
            beta_min,
            beta_max,
            half_saturation,
        }) => {
            let RetuneSpec::Saturating {
                beta_min: m,
                beta_max: x,
                half_saturation: k,
            } = RetuneSpec::<f64>::default()
            else {
                unreachable!("default retune rule is saturating")
            };
            RetuneSpec::Saturating {
                beta_min: beta_min.unwrap_or(m),
                beta_max: beta_max.unwrap_or(x),
                half_saturation: half_saturation.unwrap_or(k),
            }
        }
        Some(RetuneSection::Constant { beta }) => RetuneSpec::Constant { beta: *beta },
        Some(RetuneSection::Table { points }) => RetuneSpec::Table {
            points: points.iter().map(|[i, b]| (*i, *b)).collect(),
        },
    };
    let fee = match section.fee {
        None => d.fee,
        Some(FeeSection::Off) => FeeSpec::Off,
        Some(FeeSection::PerApp { rate }) => FeeSpec::PerApp { rate },
    };
    let noise = match section.noise {
        None => d.noise,
        Some(NoiseSection::Off) => NoiseSpec::Off,
        Some(NoiseSection::MultiplicativeGrowth { sigma }) => NoiseSpec::MultiplicativeGrowth {
            sigma: sigma.unwrap_or(tokenflow_core::model::DEFAULT_SIGMA),
        },
    };
    let price = match section.price {
        None | Some(PriceSection::Off) => None,
        Some(PriceSection::Proxy {
            base_price,
            elasticity,
        }) => {
            let dp = PriceProxySpec::<f64>::default();
            Some(PriceProxySpec {
                base_price: base_price.unwrap_or(dp.base_price),
                elasticity: elasticity.unwrap_or(dp.elasticity),
            })
        }
    };
    let mut params = ModelParams64 {
        initial_pool: section.initial_pool.unwrap_or(d.initial_pool),
        decay_rate: section.decay_rate.unwrap_or(d.decay_rate),
        initial_apps: section.initial_apps.unwrap_or(d.initial_apps),
        initial_beta: section.initial_beta,
        revenue_per_app: section.revenue_per_app.unwrap_or(d.revenue_per_app),
        initial_treasury: section.initial_treasury.unwrap_or(d.initial_treasury),
        retune_every: section.retune_every.unwrap_or(d.retune_every),
        retune,
        fee,
        noise,
        price,
        stepping: match section.stepping {
            Some(SteppingName::Euler) => Stepping::Euler,
            Some(SteppingName::Exact) | None => Stepping::Exact,
        },
    };
    params.initial_beta = Some(
        section
            .initial_beta
            .unwrap_or_else(|| params.starting_beta()),
    );
    params
}

/// Fully populated section for `params`.
pub fn model_section(params: &ModelParams64) -> ModelSection {
    ModelSection {
        initial_pool: Some(params.initial_pool),
        decay_rate: Some(params.decay_rate),
        initial_apps: Some(params.initial_apps),
        initial_beta: Some(params.starting_beta()),
        revenue_per_app: Some(params.revenue_per_app),
        initial_treasury: Some(params.initial_treasury),
        retune_every: Some(params.retune_every),
        stepping: Some(match params.stepping {
            Stepping::Exact => SteppingName::Exact,
            Stepping::Euler => SteppingName::Euler,
        }),
        retune: Some(match &params.retune {
            RetuneSpec::Saturating {
                beta_min,
                beta_max,
                half_saturation,
            } => RetuneSection::Saturating {
                beta_min: Some(*beta_min),
                beta_max: Some(*beta_max),
                half_saturation: Some(*half_saturation),
            },
            RetuneSpec::Constant { beta } => RetuneSection::Constant { beta: *beta },
            RetuneSpec::Table { points } => RetuneSection::Table {
                points: points.iter().map(|&(i, b)| [i, b]).collect(),
            },
        }),
        fee: Some(match params.fee {
            FeeSpec::Off => FeeSection::Off,
            FeeSpec::PerApp { rate } => FeeSection::PerApp { rate },
        }),
        noise: Some(match params.noise {
            NoiseSpec::Off => NoiseSection::Off,
            NoiseSpec::MultiplicativeGrowth { sigma } => {
                NoiseSection::MultiplicativeGrowth { sigma: Some(sigma) }
            }
        }),
        price: Some(match params.price {
            None => PriceSection::Off,
            Some(p) => PriceSection::Proxy {
                base_price: Some(p.base_price),
                elasticity: Some(p.elasticity),
            },
        }),
    }
}

fn issues_of(e: &ExperimentError) -> Vec<FieldIssue> {
    match e {
        ExperimentError::InvalidModel {
            source: ModelError::Invalid { issues },
            ..
        } => issues.clone(),
        _ => Vec::new(),
    }
}

/// TOML integers are signed 64-bit.
const MAX_TOML_INT: u64 = i64::MAX as u64;

fn check_seed(seed: u64, at: impl FnOnce() -> String) -> Result<(), CliError> {
    if seed > MAX_TOML_INT {
        return Err(CliError::config(format!(
            "{}: master_seed {seed} exceeds the largest TOML integer {MAX_TOML_INT}",
            at()
        )));
    }
    Ok(())
}

/// Applies defaults and overrides and validates every scenario.
///
/// `text` is the source the file was parsed from; when given, errors are
/// anchored to the offending line.
pub fn resolve(
    file: &ScenarioFile,
    text: Option<&str>,
    origin: &str,
    overrides: RunOverrides,
) -> Result<ResolvedConfig, CliError> {
    let anchor = Anchor { text, origin };
    let base = file
        .model
        .as_ref()
        .map(|m| m.get_ref().clone())
        .unwrap_or_default();
    let base_span = file
        .model
        .as_ref()
        .and_then(|m| text.map(|t| table_region(t, m.span().start, "model")));

    let implicit;
    let entries: Vec<(&ScenarioSection, Option<Range<usize>>)> = if file.scenario.is_empty() {
        implicit = ScenarioSection {
            id: "default".into(),
            horizon: None,
            runs: None,
            master_seed: None,
            model: None,
        };
        vec![(&implicit, None)]
    } else {
        file.scenario
            .iter()
            .map(|s| {
                let region = text.map(|t| table_region(t, s.span().start, "scenario"));
                (s.get_ref(), region)
            })
            .collect()
    };

    let mut seen = HashSet::new();
    let mut scenarios = Vec::with_capacity(entries.len());
    for (entry, span) in entries {
        let spans: Vec<Range<usize>> = span.iter().cloned().chain(base_span.clone()).collect();
        if !seen.insert(entry.id.as_str()) {
            return Err(CliError::config(format!(
                "{}: duplicate scenario id `{}`",
                anchor.locate(&spans, Some("id")),
                entry.id
            )));
        }
        let merged = match &entry.model {
            Some(m) => overlay(&base, m),
            None => base.clone(),
        };
        let master_seed = overrides
            .seed
            .or(entry.master_seed)
            .or(file.master_seed)
            .unwrap_or(tokenflow_core::experiment::DEFAULT_MASTER_SEED);
        check_seed(master_seed, || anchor.locate(&spans, Some("master_seed")))?;
        let spec = ScenarioSpec64 {
            id: entry.id.clone(),
            model: model_params(&merged),
            horizon: overrides
                .horizon
                .or(entry.horizon)
                .or(file.horizon)
                .unwrap_or(tokenflow_core::experiment::TABLE3_HORIZON),
            runs: overrides
                .runs
                .or(entry.runs)
                .or(file.runs)
                .unwrap_or(tokenflow_core::experiment::TABLE3_RUNS),
            master_seed,
        };
        if let Err(e) = spec.validate() {
            let issues = issues_of(&e);
            let message = if issues.is_empty() {
                let key = if spec.runs == 0 { "runs" } else { "horizon" };
                format!("{}: {e}", anchor.locate(&spans, Some(key)))
            } else {
                issues
                    .iter()
                    .map(|i| {
                        let key = i.field.rsplit('.').next().unwrap_or(&i.field);
                        format!(
                            "{}: scenario `{}`: {i}",
                            anchor.locate(&spans, Some(key)),
                            spec.id
                        )
                    })
                    .collect::<Vec<_>>()
                    .join("\n")
            };
            return Err(CliError::config(message));
        }
        scenarios.push(spec);
    }

    let out = file.output.clone().unwrap_or_default();
    let defaults = OutputSettings::default();
    Ok(ResolvedConfig {
        scenarios,
        output: OutputSettings {
            dir: out.dir.unwrap_or(defaults.dir),
            format: out.format.unwrap_or(defaults.format),
            per_run: out.per_run.unwrap_or(defaults.per_run),
        },
    })
}

impl ResolvedConfig {
    /// Scenario file equivalent to this configuration, with every value
    /// spelled out.
    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            horizon: None,
            runs: None,
            master_seed: None,
            output: Some(OutputSection {
                dir: Some(self.output.dir.clone()),
                format: Some(self.output.format),
                per_run: Some(self.output.per_run),
            }),
            model: None,
            scenario: self
                .scenarios
                .iter()
                .map(|s| {
                    Spanned::new(
                        0..0,
                        ScenarioSection {
                            id: s.id.clone(),
                            horizon: Some(s.horizon),
                            runs: Some(s.runs),
                            master_seed: Some(s.master_seed),
                            model: Some(model_section(&s.model)),
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn to_toml(&self) -> String {
        let body = toml::to_string(&self.to_file()).expect("resolved config serializes");
        format!("# Resolved configuration: every default made explicit.\n\n{body}")
    }
}

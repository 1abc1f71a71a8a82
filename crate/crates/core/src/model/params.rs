use std::fmt;

use serde::Serialize;

use crate::model::ModelError;
use crate::Scalar;

// Defaults for quantities the subsidy model leaves open. Only the pool size
// and decay rate come from the experiment design; everything here is a
// modelling choice and is overridable.
pub const DEFAULT_INITIAL_APPS: f64 = 10.0;
pub const DEFAULT_REVENUE_PER_APP: f64 = 1.5e6;
pub const DEFAULT_INITIAL_TREASURY: f64 = 2.0e9;
pub const DEFAULT_RETUNE_EVERY: u32 = 30;
pub const DEFAULT_BETA_MIN: f64 = 0.0005;
pub const DEFAULT_BETA_MAX: f64 = 0.01;
pub const DEFAULT_HALF_SATURATION: f64 = 1.0e7;
pub const DEFAULT_SIGMA: f64 = 0.01;
pub const DEFAULT_PRICE_ELASTICITY: f64 = 4.0;

/// Discretization of the decay and growth equations onto daily steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stepping {
    /// `x' = x * exp(rate * dt)`.
    #[default]
    Exact,
    /// `x' = x * (1 + rate * dt)`.
    Euler,
}

/// How the app growth rate is recomputed from developer income.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RetuneSpec<S> {
    /// `beta_min + (beta_max - beta_min) * I / (I + half_saturation)`.
    Saturating {
        beta_min: S,
        beta_max: S,
        half_saturation: S,
    },
    Constant {
        beta: S,
    },
    /// Piecewise-linear in income through `(income, beta)` points with
    /// strictly increasing income; flat outside the first and last point.
    Table {
        points: Vec<(S, S)>,
    },
}

impl<S: Scalar> Default for RetuneSpec<S> {
    fn default() -> Self {
        RetuneSpec::Saturating {
            beta_min: S::lit(DEFAULT_BETA_MIN),
            beta_max: S::lit(DEFAULT_BETA_MAX),
            half_saturation: S::lit(DEFAULT_HALF_SATURATION),
        }
    }
}

impl<S: Scalar> RetuneSpec<S> {
    /// `[beta_min, beta_max]` reachable by this rule.
    pub fn bounds(&self) -> (S, S) {
        match self {
            RetuneSpec::Saturating {
                beta_min, beta_max, ..
            } => (*beta_min, *beta_max),
            RetuneSpec::Constant { beta } => (*beta, *beta),
            RetuneSpec::Table { points } => points
                .iter()
                .fold((S::infinity(), S::neg_infinity()), |(lo, hi), &(_, b)| {
                    (lo.min(b), hi.max(b))
                }),
        }
    }

    fn issues(&self, out: &mut Vec<FieldIssue>) {
        match self {
            RetuneSpec::Saturating {
                beta_min,
                beta_max,
                half_saturation,
            } => {
                if !beta_min.is_finite() || !beta_max.is_finite() || *beta_min > *beta_max {
                    out.push(FieldIssue::new(
                        "retune.beta_min",
                        format!("beta_min ({beta_min}) must not exceed beta_max ({beta_max})"),
                    ));
                }
                if !(*half_saturation > S::zero()) || !half_saturation.is_finite() {
                    out.push(FieldIssue::new(
                        "retune.half_saturation",
                        format!("must be positive, got {half_saturation}"),
                    ));
                }
            }
            RetuneSpec::Constant { beta } => {
                if !beta.is_finite() {
                    out.push(FieldIssue::new("retune.beta", "must be finite"));
                }
            }
            RetuneSpec::Table { points } => {
                if points.is_empty() {
                    out.push(FieldIssue::new("retune.points", "needs at least one point"));
                }
                if points.iter().any(|(i, b)| !i.is_finite() || !b.is_finite()) {
                    out.push(FieldIssue::new("retune.points", "values must be finite"));
                }
                if points.windows(2).any(|w| !(w[0].0 < w[1].0)) {
                    out.push(FieldIssue::new(
                        "retune.points",
                        "income breakpoints must be strictly increasing",
                    ));
                }
            }
        }
    }
}

/// Platform fees flowing into the treasury.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FeeSpec<S> {
    #[default]
    Off,
    /// Daily accrual `rate * c * U`.
    PerApp { rate: S },
}

/// Source of run-to-run variation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseSpec<S> {
    Off,
    /// Mean-one lognormal shock on the daily growth factor with log-std
    /// `sigma`.
    MultiplicativeGrowth {
        sigma: S,
    },
}

impl<S: Scalar> Default for NoiseSpec<S> {
    fn default() -> Self {
        NoiseSpec::MultiplicativeGrowth {
            sigma: S::lit(DEFAULT_SIGMA),
        }
    }
}

impl<S: Scalar> NoiseSpec<S> {
    pub fn is_off(&self) -> bool {
        match self {
            NoiseSpec::Off => true,
            NoiseSpec::MultiplicativeGrowth { sigma } => *sigma == S::zero(),
        }
    }
}

/// `price = base_price * (U / N0)^elasticity`. Not a price model; a
/// monotone stand-in for valuing treasury holdings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriceProxySpec<S> {
    pub base_price: S,
    pub elasticity: S,
}

impl<S: Scalar> Default for PriceProxySpec<S> {
    fn default() -> Self {
        Self {
            base_price: S::one(),
            elasticity: S::lit(DEFAULT_PRICE_ELASTICITY),
        }
    }
}

/// One offending parameter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldIssue {
    pub field: String,
    pub message: String,
}

impl FieldIssue {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for FieldIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Every constant and plug-in of the model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelParams<S> {
    /// A0, XNS.
    pub initial_pool: S,
    /// lambda, per day.
    pub decay_rate: S,
    /// N0.
    pub initial_apps: S,
    /// beta(0); `None` starts at the lower bound of the retune rule.
    pub initial_beta: Option<S>,
    /// c, XNS per app.
    pub revenue_per_app: S,
    /// T0, XNS.
    pub initial_treasury: S,
    /// j, days between growth-rate retunes.
    pub retune_every: u32,
    pub retune: RetuneSpec<S>,
    pub fee: FeeSpec<S>,
    pub noise: NoiseSpec<S>,
    pub price: Option<PriceProxySpec<S>>,
    pub stepping: Stepping,
}

impl<S: Scalar> Default for ModelParams<S> {
    fn default() -> Self {
        Self {
            initial_pool: S::lit(250.0e6),
            decay_rate: S::lit(0.0005),
            initial_apps: S::lit(DEFAULT_INITIAL_APPS),
            initial_beta: None,
            revenue_per_app: S::lit(DEFAULT_REVENUE_PER_APP),
            initial_treasury: S::lit(DEFAULT_INITIAL_TREASURY),
            retune_every: DEFAULT_RETUNE_EVERY,
            retune: RetuneSpec::default(),
            fee: FeeSpec::Off,
            noise: NoiseSpec::default(),
            price: None,
            stepping: Stepping::Exact,
        }
    }
}

impl<S: Scalar> ModelParams<S> {
    /// Defaults with noise disabled: every run is the same deterministic path.
    pub fn deterministic() -> Self {
        Self {
            noise: NoiseSpec::Off,
            ..Self::default()
        }
    }

    /// beta(0) after applying the default.
    pub fn starting_beta(&self) -> S {
        self.initial_beta.unwrap_or_else(|| self.retune.bounds().0)
    }

    /// Checks every field and reports all problems at once.
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut issues = Vec::new();
        let non_negative = |v: S, field: &str, issues: &mut Vec<FieldIssue>| {
            if !v.is_finite() || v < S::zero() {
                issues.push(FieldIssue::new(
                    field,
                    format!("must be finite and non-negative, got {v}"),
                ));
            }
        };
        non_negative(self.initial_pool, "initial_pool", &mut issues);
        non_negative(self.decay_rate, "decay_rate", &mut issues);
        non_negative(self.revenue_per_app, "revenue_per_app", &mut issues);
        if !self.initial_apps.is_finite() || !(self.initial_apps > S::zero()) {
            issues.push(FieldIssue::new(
                "initial_apps",
                format!("must be positive, got {}", self.initial_apps),
            ));
        }
        if !self.initial_treasury.is_finite() {
            issues.push(FieldIssue::new("initial_treasury", "must be finite"));
        }
        if self.retune_every == 0 {
            issues.push(FieldIssue::new("retune_every", "must be at least 1 day"));
        }
        if self.stepping == Stepping::Euler && self.decay_rate >= S::one() {
            issues.push(FieldIssue::new(
                "decay_rate",
                format!(
                    "Euler stepping needs decay_rate * 1 day < 1, got {}",
                    self.decay_rate
                ),
            ));
        }
        let retune_start = issues.len();
        self.retune.issues(&mut issues);
        if issues.len() == retune_start {
            let (lo, hi) = self.retune.bounds();
            if let Some(b) = self.initial_beta {
                if !b.is_finite() || b < lo || b > hi {
                    issues.push(FieldIssue::new(
                        "initial_beta",
                        format!("must lie in the retune bounds [{lo}, {hi}], got {b}"),
                    ));
                }
            }
        }
        if let FeeSpec::PerApp { rate } = self.fee {
            if !rate.is_finite() || rate < S::zero() {
                issues.push(FieldIssue::new(
                    "fee.rate",
                    format!("must be non-negative, got {rate}"),
                ));
            }
        }
        if let NoiseSpec::MultiplicativeGrowth { sigma } = self.noise {
            if !sigma.is_finite() || sigma < S::zero() {
                issues.push(FieldIssue::new(
                    "noise.sigma",
                    format!("must be non-negative, got {sigma}"),
                ));
            }
        }
        if let Some(p) = &self.price {
            if !p.base_price.is_finite() || !(p.base_price > S::zero()) {
                issues.push(FieldIssue::new("price.base_price", "must be positive"));
            }
            if !p.elasticity.is_finite() || p.elasticity < S::zero() {
                issues.push(FieldIssue::new("price.elasticity", "must be non-negative"));
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ModelError::invalid(issues))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ModelParams::<f64>::default().validate().unwrap();
        ModelParams::<f32>::default().validate().unwrap();
        assert_eq!(ModelParams::<f64>::default().starting_beta(), 0.0005);
    }

    #[test]
    fn every_bad_field_is_listed() {
        let p = ModelParams::<f64> {
            decay_rate: -1.0,
            initial_apps: 0.0,
            retune_every: 0,
            retune: RetuneSpec::Saturating {
                beta_min: 0.02,
                beta_max: 0.01,
                half_saturation: 0.0,
            },
            fee: FeeSpec::PerApp { rate: -0.1 },
            ..ModelParams::default()
        };
        let Err(ModelError::Invalid { issues }) = p.validate() else {
            panic!("expected invalid");
        };
        let fields: Vec<_> = issues.iter().map(|i| i.field.as_str()).collect();
        assert_eq!(
            fields,
            [
                "decay_rate",
                "initial_apps",
                "retune_every",
                "retune.beta_min",
                "retune.half_saturation",
                "fee.rate"
            ]
        );
    }

    #[test]
    fn initial_beta_must_respect_bounds() {
        let p = ModelParams::<f64> {
            initial_beta: Some(0.5),
            ..ModelParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn euler_rejects_large_decay() {
        let p = ModelParams::<f64> {
            decay_rate: 1.0,
            stepping: Stepping::Euler,
            ..ModelParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn table_needs_increasing_breakpoints() {
        let p = ModelParams::<f64> {
            retune: RetuneSpec::Table {
                points: vec![(0.0, 0.001), (0.0, 0.002)],
            },
            ..ModelParams::default()
        };
        assert!(p.validate().is_err());
    }
}

//! Application-subsidy token model.
//!
//! State variables, in schema order:
//!
//! | name                | meaning                                          |
//! |---------------------|--------------------------------------------------|
//! | `A`                 | remaining subsidy pool (XNS)                     |
//! | `outlay`            | subsidy paid out during the last step (XNS)      |
//! | `cumulative_outlay` | subsidy paid out since t = 0 (XNS)               |
//! | `U`                 | number of apps (real-valued)                     |
//! | `beta`              | growth rate applied over the last step (per day) |
//! | `I`                 | developer income, `A0 - A + c * U` (XNS)         |
//! | `fee_accrued`       | platform fees received since t = 0 (XNS)         |
//! | `T`                 | foundation treasury (XNS)                        |
//! | `price`             | optional adoption-driven price proxy             |
//! | `treasury_warning`  | 1 when `T < 0`, else 0                           |
//!
//! `price` appears only when the price proxy is enabled. The proxy is not
//! part of the subsidy model proper; it exists so the value of treasury
//! holdings can be compared across scenarios.

mod flows;
mod params;
mod pipeline;

pub use flows::{
    app_growth_step, dev_income, fee_accrual, lognormal_shock, price_proxy, retune_beta,
    retune_due, subsidy_decay_step, treasury_step, AppUsageState, DevIncomeState, SubsidyPoolState,
    TreasuryState,
};
pub use params::{
    FeeSpec, FieldIssue, ModelParams, NoiseSpec, PriceProxySpec, RetuneSpec, Stepping,
    DEFAULT_BETA_MAX, DEFAULT_BETA_MIN, DEFAULT_HALF_SATURATION, DEFAULT_INITIAL_APPS,
    DEFAULT_INITIAL_TREASURY, DEFAULT_PRICE_ELASTICITY, DEFAULT_RETUNE_EVERY,
    DEFAULT_REVENUE_PER_APP, DEFAULT_SIGMA,
};
pub use pipeline::{build_insolar_pipeline, initial_state, schema_for, vars};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid model parameters: {}", issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid { issues: Vec<FieldIssue> },
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("Euler decay with rate*dt = {0} >= 1 would drive the pool negative")]
    EulerUnstable(f64),
    #[error("growth shock must be positive, got {0}")]
    NonPositiveShock(f64),
    #[error("developer income must be non-negative for retuning, got {0}")]
    NegativeIncome(f64),
    #[error("price proxy needs a positive app count, got {0}")]
    NonPositiveApps(f64),
}

impl ModelError {
    pub(crate) fn invalid(issues: Vec<FieldIssue>) -> Self {
        ModelError::Invalid { issues }
    }
}

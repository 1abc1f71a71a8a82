//! Per-step flows of the subsidy model as pure functions.

use crate::model::{FeeSpec, ModelError, PriceProxySpec, RetuneSpec, Stepping};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsidyPoolState<S> {
    pub remaining: S,
    pub initial: S,
    pub decay_rate: S,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppUsageState<S> {
    pub apps: S,
    pub initial_apps: S,
    pub growth_rate: S,
    pub retune_every: u32,
    pub beta_bounds: (S, S),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DevIncomeState<S> {
    pub income: S,
    pub revenue_per_app: S,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreasuryState<S> {
    pub balance: S,
    pub initial: S,
    pub fee_accrued: S,
}

fn check_dt<S: Scalar>(dt: S) -> Result<(), ModelError> {
    if dt > S::zero() && dt.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonPositiveStep(dt.as_f64()))
    }
}

/// Decays the pool over `dt` days and returns the new pool with the amount
/// paid out to developers.
pub fn subsidy_decay_step<S: Scalar>(
    pool: SubsidyPoolState<S>,
    dt: S,
    stepping: Stepping,
) -> Result<(SubsidyPoolState<S>, S), ModelError> {
    check_dt(dt)?;
    let rate_dt = pool.decay_rate * dt;
    let remaining = match stepping {
        Stepping::Exact => pool.remaining * (-rate_dt).exp(),
        Stepping::Euler => {
            if rate_dt >= S::one() {
                return Err(ModelError::EulerUnstable(rate_dt.as_f64()));
            }
            pool.remaining * (S::one() - rate_dt)
        }
    };
    let outlay = pool.remaining - remaining;
    Ok((SubsidyPoolState { remaining, ..pool }, outlay))
}

/// Grows the app count over `dt` days at the current rate, scaled by
/// `shock` (1 when noise is off).
pub fn app_growth_step<S: Scalar>(
    usage: AppUsageState<S>,
    dt: S,
    shock: S,
    stepping: Stepping,
) -> Result<AppUsageState<S>, ModelError> {
    check_dt(dt)?;
    if !(shock > S::zero()) {
        return Err(ModelError::NonPositiveShock(shock.as_f64()));
    }
    let factor = match stepping {
        Stepping::Exact => (usage.growth_rate * dt).exp(),
        Stepping::Euler => S::one() + usage.growth_rate * dt,
    };
    Ok(AppUsageState {
        apps: usage.apps * factor * shock,
        ..usage
    })
}

/// Whether the growth rate is recomputed when stepping from day `t`.
///
/// Retunes happen at every positive multiple of `every`; the first `every`
/// days run at the configured starting rate.
pub fn retune_due(t: u64, every: u32) -> bool {
    t > 0 && t.is_multiple_of(u64::from(every.max(1)))
}

/// New growth rate from developer income, clamped to the rule's bounds.
pub fn retune_beta<S: Scalar>(income: S, spec: &RetuneSpec<S>) -> Result<S, ModelError> {
    if income < S::zero() {
        return Err(ModelError::NegativeIncome(income.as_f64()));
    }
    let beta = match spec {
        RetuneSpec::Saturating {
            beta_min,
            beta_max,
            half_saturation,
        } => {
            if *beta_min > *beta_max || !(*half_saturation > S::zero()) {
                return Err(ModelError::invalid(vec![crate::model::FieldIssue::new(
                    "retune",
                    "saturating rule needs beta_min <= beta_max and half_saturation > 0",
                )]));
            }
            // I / (I + K) written as 1 / (1 + K / I) keeps the ratio exact at
            // I = K and well-behaved for huge incomes
            let fraction = if income == S::zero() {
                S::zero()
            } else if income.is_infinite() {
                S::one()
            } else {
                S::one() / (S::one() + *half_saturation / income)
            };
            *beta_min + (*beta_max - *beta_min) * fraction
        }
        RetuneSpec::Constant { beta } => *beta,
        RetuneSpec::Table { points } => interpolate(points, income).ok_or_else(|| {
            ModelError::invalid(vec![crate::model::FieldIssue::new(
                "retune.points",
                "table needs at least one point",
            )])
        })?,
    };
    let (lo, hi) = spec.bounds();
    Ok(beta.max(lo).min(hi))
}

fn interpolate<S: Scalar>(points: &[(S, S)], x: S) -> Option<S> {
    let first = points.first()?;
    let last = points.last()?;
    if x <= first.0 {
        return Some(first.1);
    }
    if x >= last.0 {
        return Some(last.1);
    }
    let k = points.partition_point(|p| p.0 <= x);
    let (x0, y0) = points[k - 1];
    let (x1, y1) = points[k];
    Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
}

/// `I = (A0 - A) + c * U`.
pub fn dev_income<S: Scalar>(
    pool: &SubsidyPoolState<S>,
    usage: &AppUsageState<S>,
    revenue_per_app: S,
) -> S {
    (pool.initial - pool.remaining) + revenue_per_app * usage.apps
}

/// Debits the subsidy outlay and credits the day's fees. The returned flag
/// is set when the balance is negative; it is never clamped.
pub fn treasury_step<S: Scalar>(
    treasury: TreasuryState<S>,
    outlay: S,
    fee_today: S,
) -> (TreasuryState<S>, bool) {
    let balance = treasury.balance - outlay + fee_today;
    let next = TreasuryState {
        balance,
        initial: treasury.initial,
        fee_accrued: treasury.fee_accrued + fee_today,
    };
    (next, balance < S::zero())
}

/// Platform fees accrued over `dt` days.
pub fn fee_accrual<S: Scalar>(
    usage: &AppUsageState<S>,
    revenue_per_app: S,
    spec: &FeeSpec<S>,
    dt: S,
) -> Result<S, ModelError> {
    check_dt(dt)?;
    match *spec {
        FeeSpec::Off => Ok(S::zero()),
        FeeSpec::PerApp { rate } => {
            if rate < S::zero() {
                return Err(ModelError::invalid(vec![crate::model::FieldIssue::new(
                    "fee.rate",
                    format!("must be non-negative, got {rate}"),
                )]));
            }
            Ok(rate * revenue_per_app * usage.apps * dt)
        }
    }
}

/// `base_price * (U / N0)^elasticity`.
pub fn price_proxy<S: Scalar>(
    usage: &AppUsageState<S>,
    spec: &PriceProxySpec<S>,
) -> Result<S, ModelError> {
    if !(usage.apps > S::zero()) {
        return Err(ModelError::NonPositiveApps(usage.apps.as_f64()));
    }
    if spec.elasticity == S::zero() {
        return Ok(spec.base_price);
    }
    Ok(spec.base_price * (usage.apps / usage.initial_apps).powf(spec.elasticity))
}

/// Mean-one lognormal shock `exp(sigma * z - sigma^2 / 2)` with `z`
/// standard normal from two uniforms (Box-Muller, cosine branch).
pub fn lognormal_shock<S: Scalar>(sigma: S, u1: S, u2: S) -> S {
    let two = S::lit(2.0);
    let z = (-two * u1.ln()).sqrt() * (two * S::lit(std::f64::consts::PI) * u2).cos();
    (sigma * z - sigma * sigma / two).exp()
}

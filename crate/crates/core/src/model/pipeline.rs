use std::sync::Arc;

use crate::kernel::{FnStage, KernelError, Schema, SimState, UpdatePipeline, VarId};
use crate::model::{
    app_growth_step, dev_income, fee_accrual, lognormal_shock, price_proxy, retune_beta,
    retune_due, subsidy_decay_step, treasury_step, AppUsageState, ModelError, ModelParams,
    NoiseSpec, SubsidyPoolState, TreasuryState,
};
use crate::Scalar;

/// State variable names.
pub mod vars {
    pub const POOL: &str = "A";
    pub const OUTLAY: &str = "outlay";
    pub const CUMULATIVE_OUTLAY: &str = "cumulative_outlay";
    pub const APPS: &str = "U";
    pub const BETA: &str = "beta";
    pub const INCOME: &str = "I";
    pub const FEE_ACCRUED: &str = "fee_accrued";
    pub const TREASURY: &str = "T";
    pub const PRICE: &str = "price";
    pub const TREASURY_WARNING: &str = "treasury_warning";
}

/// Schema for `params`; `price` is present only with the proxy enabled.
pub fn schema_for<S: Scalar>(params: &ModelParams<S>) -> Schema {
    let mut names = vec![
        vars::POOL,
        vars::OUTLAY,
        vars::CUMULATIVE_OUTLAY,
        vars::APPS,
        vars::BETA,
        vars::INCOME,
        vars::FEE_ACCRUED,
        vars::TREASURY,
    ];
    if params.price.is_some() {
        names.push(vars::PRICE);
    }
    names.push(vars::TREASURY_WARNING);
    Schema::new(names).expect("model variable names are distinct")
}

/// State at t = 0.
pub fn initial_state<S: Scalar>(params: &ModelParams<S>) -> Result<SimState<S>, ModelError> {
    params.validate()?;
    let schema = Arc::new(schema_for(params));
    let income = params.revenue_per_app * params.initial_apps;
    let mut values = vec![
        params.initial_pool,
        S::zero(),
        S::zero(),
        params.initial_apps,
        params.starting_beta(),
        income,
        S::zero(),
        params.initial_treasury,
    ];
    if let Some(p) = &params.price {
        values.push(p.base_price);
    }
    values.push(flag(params.initial_treasury < S::zero()));
    Ok(SimState::new(schema, 0, values).expect("initial state matches schema"))
}

fn flag<S: Scalar>(on: bool) -> S {
    if on {
        S::one()
    } else {
        S::zero()
    }
}

#[derive(Clone, Copy)]
struct Ids {
    pool: VarId,
    outlay: VarId,
    cumulative: VarId,
    apps: VarId,
    beta: VarId,
    income: VarId,
    fees: VarId,
    treasury: VarId,
    price: Option<VarId>,
    warning: VarId,
}

impl Ids {
    fn new(schema: &Schema) -> Self {
        let id = |n| schema.id(n).expect("model schema variable");
        Self {
            pool: id(vars::POOL),
            outlay: id(vars::OUTLAY),
            cumulative: id(vars::CUMULATIVE_OUTLAY),
            apps: id(vars::APPS),
            beta: id(vars::BETA),
            income: id(vars::INCOME),
            fees: id(vars::FEE_ACCRUED),
            treasury: id(vars::TREASURY),
            price: schema.id(vars::PRICE),
            warning: id(vars::TREASURY_WARNING),
        }
    }
}

fn usage_of<S: Scalar>(p: &ModelParams<S>, apps: S, growth_rate: S) -> AppUsageState<S> {
    AppUsageState {
        apps,
        initial_apps: p.initial_apps,
        growth_rate,
        retune_every: p.retune_every,
        beta_bounds: p.retune.bounds(),
    }
}

fn msg(e: ModelError) -> String {
    e.to_string()
}

/// Builds the per-day update pipeline. Stages run in this order:
///
/// 1. `subsidy_decay`: `A`, `outlay`, `cumulative_outlay`
/// 2. `retune_beta`: `beta` from `I(t)` when `t` is a positive multiple of j
/// 3. `app_growth`: `U` with the rate from stage 2 and one growth shock
/// 4. `fee_accrual`: `fee_accrued` from the new `U`
/// 5. `treasury`: `T`, `treasury_warning`
/// 6. `dev_income`: `I` from the new `A` and `U`
/// 7. `price_proxy` (only when enabled): `price`
///
/// Stage 3 consumes two uniform draws per step when growth noise is on and
/// none otherwise; no other stage draws.
pub fn build_insolar_pipeline<S: Scalar>(
    params: &ModelParams<S>,
) -> Result<UpdatePipeline<S, ModelParams<S>>, ModelError> {
    params.validate()?;
    let schema = Arc::new(schema_for(params));
    let ids = Ids::new(&schema);
    let mut pipeline = UpdatePipeline::new(schema);
    let one_day = S::one();

    let stages: Vec<FnStage<S, ModelParams<S>>> = vec![
        FnStage::new(
            "subsidy_decay",
            vec![ids.pool, ids.outlay, ids.cumulative],
            0,
            move |v, p: &ModelParams<S>, _, out| {
                let pool = SubsidyPoolState {
                    remaining: v.prev(ids.pool),
                    initial: p.initial_pool,
                    decay_rate: p.decay_rate,
                };
                let (next, outlay) = subsidy_decay_step(pool, one_day, p.stepping).map_err(msg)?;
                out.push((ids.pool, next.remaining));
                out.push((ids.outlay, outlay));
                out.push((ids.cumulative, v.prev(ids.cumulative) + outlay));
                Ok(())
            },
        ),
        FnStage::new(
            "retune_beta",
            vec![ids.beta],
            0,
            move |v, p: &ModelParams<S>, _, out| {
                let beta = if retune_due(v.t(), p.retune_every) {
                    retune_beta(v.prev(ids.income), &p.retune).map_err(msg)?
                } else {
                    v.prev(ids.beta)
                };
                out.push((ids.beta, beta));
                Ok(())
            },
        ),
        FnStage::new(
            "app_growth",
            vec![ids.apps],
            if params.noise.is_off() { 0 } else { 2 },
            move |v, p: &ModelParams<S>, draws, out| {
                let shock = match (p.noise, draws) {
                    (NoiseSpec::MultiplicativeGrowth { sigma }, [u1, u2]) => {
                        lognormal_shock(sigma, *u1, *u2)
                    }
                    _ => S::one(),
                };
                let usage = usage_of(p, v.prev(ids.apps), v.current(ids.beta));
                let next = app_growth_step(usage, one_day, shock, p.stepping).map_err(msg)?;
                out.push((ids.apps, next.apps));
                Ok(())
            },
        ),
        FnStage::new(
            "fee_accrual",
            vec![ids.fees],
            0,
            move |v, p: &ModelParams<S>, _, out| {
                let usage = usage_of(p, v.current(ids.apps), v.current(ids.beta));
                let fee = fee_accrual(&usage, p.revenue_per_app, &p.fee, one_day).map_err(msg)?;
                out.push((ids.fees, v.prev(ids.fees) + fee));
                Ok(())
            },
        ),
        FnStage::new(
            "treasury",
            vec![ids.treasury, ids.warning],
            0,
            move |v, p: &ModelParams<S>, _, out| {
                let fee_today = v.current(ids.fees) - v.prev(ids.fees);
                let before = TreasuryState {
                    balance: v.prev(ids.treasury),
                    initial: p.initial_treasury,
                    fee_accrued: v.prev(ids.fees),
                };
                let (after, negative) = treasury_step(before, v.current(ids.outlay), fee_today);
                out.push((ids.treasury, after.balance));
                out.push((ids.warning, flag(negative)));
                Ok(())
            },
        ),
        FnStage::new(
            "dev_income",
            vec![ids.income],
            0,
            move |v, p: &ModelParams<S>, _, out| {
                let pool = SubsidyPoolState {
                    remaining: v.current(ids.pool),
                    initial: p.initial_pool,
                    decay_rate: p.decay_rate,
                };
                let usage = usage_of(p, v.current(ids.apps), v.current(ids.beta));
                out.push((ids.income, dev_income(&pool, &usage, p.revenue_per_app)));
                Ok(())
            },
        ),
    ];
    for stage in stages {
        pipeline.push(stage).map_err(kernel_bug)?;
    }
    if let Some(price_id) = ids.price {
        pipeline
            .push(FnStage::new(
                "price_proxy",
                vec![price_id],
                0,
                move |v, p: &ModelParams<S>, _, out| {
                    let spec = p
                        .price
                        .as_ref()
                        .ok_or_else(|| "price proxy disabled in params".to_string())?;
                    let usage = usage_of(p, v.current(ids.apps), v.current(ids.beta));
                    out.push((price_id, price_proxy(&usage, spec).map_err(msg)?));
                    Ok(())
                },
            ))
            .map_err(kernel_bug)?;
    }
    Ok(pipeline)
}

fn kernel_bug(e: KernelError) -> ModelError {
    unreachable!("model pipeline wiring is static: {e}")
}

use crate::experiment::ExperimentError;
use crate::kernel::{run_monte_carlo, Ensemble, EnsembleError, EnsembleJob, MonteCarloSpec};
use crate::model::{
    build_insolar_pipeline, initial_state, FeeSpec, ModelParams, NoiseSpec, PriceProxySpec,
    RetuneSpec, Stepping,
};
use crate::Scalar;

/// Initial pool sizes of the four scenarios, XNS.
pub const TABLE3_POOLS: [f64; 4] = [250.0e6, 500.0e6, 750.0e6, 1000.0e6];
pub const TABLE3_DECAY_RATE: f64 = 0.0005;
pub const TABLE3_HORIZON: u64 = 3652;
pub const TABLE3_RUNS: u64 = 100;
/// Shared by all scenarios of a sweep so run `k` sees the same shocks in
/// every scenario.
pub const DEFAULT_MASTER_SEED: u64 = 20_200_204;

/// One Monte Carlo experiment: model, horizon, run count and master seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec<S> {
    pub id: String,
    pub model: ModelParams<S>,
    pub horizon: u64,
    pub runs: u64,
    pub master_seed: u64,
}

impl<S: Scalar> ScenarioSpec<S> {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.runs == 0 {
            return Err(ExperimentError::InvalidScenario {
                id: self.id.clone(),
                message: "runs must be at least 1".into(),
            });
        }
        if self.horizon == 0 {
            return Err(ExperimentError::InvalidScenario {
                id: self.id.clone(),
                message: "horizon must be at least 1 day".into(),
            });
        }
        self.model
            .validate()
            .map_err(|source| ExperimentError::InvalidModel {
                id: self.id.clone(),
                source,
            })
    }

    pub fn monte_carlo(&self) -> MonteCarloSpec {
        MonteCarloSpec {
            horizon: self.horizon,
            runs: self.runs,
            master_seed: self.master_seed,
        }
    }

    /// Builds the model and runs the ensemble.
    pub fn run(&self) -> Result<Ensemble<S>, EnsembleError> {
        let setup = |e: ExperimentError| EnsembleError::Invalid {
            scenario: self.id.clone(),
            message: e.to_string(),
        };
        self.validate().map_err(setup)?;
        let model_err = |source| {
            setup(ExperimentError::InvalidModel {
                id: self.id.clone(),
                source,
            })
        };
        let pipeline = build_insolar_pipeline(&self.model).map_err(model_err)?;
        let initial = initial_state(&self.model).map_err(model_err)?;
        run_monte_carlo(
            &self.id,
            &initial,
            &pipeline,
            &self.model,
            self.monte_carlo(),
        )
    }
}

impl<S: Scalar> EnsembleJob<S> for ScenarioSpec<S> {
    fn id(&self) -> &str {
        &self.id
    }

    fn run(&self) -> Result<Ensemble<S>, EnsembleError> {
        ScenarioSpec::run(self)
    }
}

/// Changes applied uniformly to every scenario of the pool-size sweep.
///
/// `initial_pool` and `decay_rate` exist so callers can pass a complete
/// override set; setting either is an error.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamOverrides<S> {
    pub initial_pool: Option<S>,
    pub decay_rate: Option<S>,
    pub initial_apps: Option<S>,
    pub initial_beta: Option<S>,
    pub revenue_per_app: Option<S>,
    pub initial_treasury: Option<S>,
    pub retune_every: Option<u32>,
    pub retune: Option<RetuneSpec<S>>,
    pub fee: Option<FeeSpec<S>>,
    pub noise: Option<NoiseSpec<S>>,
    /// Shorthand for growth noise with this sigma; zero turns noise off.
    pub sigma: Option<S>,
    pub price: Option<Option<PriceProxySpec<S>>>,
    pub stepping: Option<Stepping>,
    pub horizon: Option<u64>,
    pub runs: Option<u64>,
    pub master_seed: Option<u64>,
}

impl<S: Scalar> ParamOverrides<S> {
    fn apply(&self, model: &mut ModelParams<S>) {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { model.$field = v.clone(); })*
            };
        }
        set!(
            revenue_per_app,
            initial_apps,
            initial_treasury,
            retune_every,
            retune,
            fee,
            noise,
            price,
            stepping
        );
        if let Some(b) = self.initial_beta {
            model.initial_beta = Some(b);
        }
        if let Some(sigma) = self.sigma {
            model.noise = if sigma == S::zero() {
                NoiseSpec::Off
            } else {
                NoiseSpec::MultiplicativeGrowth { sigma }
            };
        }
    }
}

fn pool_id(pool: f64) -> String {
    format!("a0-{}m", (pool / 1.0e6).round() as u64)
}

/// The four pool-size scenarios with shared defaults and `overrides`
/// applied to each.
pub fn table3_scenarios<S: Scalar>(
    overrides: &ParamOverrides<S>,
) -> Result<Vec<ScenarioSpec<S>>, ExperimentError> {
    if overrides.initial_pool.is_some() {
        return Err(ExperimentError::SweptAxisOverride("initial_pool"));
    }
    if overrides.decay_rate.is_some() {
        return Err(ExperimentError::SweptAxisOverride("decay_rate"));
    }
    TABLE3_POOLS
        .iter()
        .map(|&pool| {
            let mut model = ModelParams {
                initial_pool: S::lit(pool),
                decay_rate: S::lit(TABLE3_DECAY_RATE),
                ..ModelParams::default()
            };
            overrides.apply(&mut model);
            let spec = ScenarioSpec {
                id: pool_id(pool),
                model,
                horizon: overrides.horizon.unwrap_or(TABLE3_HORIZON),
                runs: overrides.runs.unwrap_or(TABLE3_RUNS),
                master_seed: overrides.master_seed.unwrap_or(DEFAULT_MASTER_SEED),
            };
            spec.validate()?;
            Ok(spec)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_reproduce_the_experiment_table() {
        let specs = table3_scenarios::<f64>(&ParamOverrides::default()).unwrap();
        assert_eq!(specs.len(), 4);
        let pools: Vec<f64> = specs.iter().map(|s| s.model.initial_pool).collect();
        assert_eq!(pools, [250.0e6, 500.0e6, 750.0e6, 1000.0e6]);
        for s in &specs {
            assert_eq!(s.model.decay_rate, 0.0005);
            assert_eq!(s.horizon, 3652);
            assert_eq!(s.runs, 100);
            assert_eq!(s.master_seed, DEFAULT_MASTER_SEED);
        }
        let ids: Vec<&str> = specs.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["a0-250m", "a0-500m", "a0-750m", "a0-1000m"]);
    }

    #[test]
    fn overrides_apply_uniformly() {
        let o = ParamOverrides::<f64> {
            runs: Some(1),
            sigma: Some(0.0),
            ..Default::default()
        };
        let specs = table3_scenarios(&o).unwrap();
        assert!(specs.iter().all(|s| s.runs == 1 && s.model.noise.is_off()));
        assert!(matches!(specs[0].model.noise, NoiseSpec::Off));
    }

    #[test]
    fn swept_axes_cannot_be_overridden() {
        let o = ParamOverrides::<f64> {
            initial_pool: Some(1.0),
            ..Default::default()
        };
        assert_eq!(
            table3_scenarios(&o),
            Err(ExperimentError::SweptAxisOverride("initial_pool"))
        );
        let o = ParamOverrides::<f64> {
            decay_rate: Some(0.1),
            ..Default::default()
        };
        assert_eq!(
            table3_scenarios(&o),
            Err(ExperimentError::SweptAxisOverride("decay_rate"))
        );
    }

    #[test]
    fn invalid_override_is_reported_per_scenario() {
        let o = ParamOverrides::<f64> {
            runs: Some(0),
            ..Default::default()
        };
        assert!(matches!(
            table3_scenarios(&o),
            Err(ExperimentError::InvalidScenario { .. })
        ));
    }
}

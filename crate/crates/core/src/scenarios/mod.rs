//! Built-in scenarios and their configuration schema.
//!
//! A configuration file has two tables:
//!
//! ```toml
//! [scenario]
//! seed = 7
//! noise = { std_dev = 0.1, cap = 1.0 }   # optional
//! mismatch = { scale = 0.01, seed = 3 }  # optional
//!
//! [scenario.model]
//! name = "quadratic"                      # quadratic | static | routing | feeder
//! amplitude = 0.5
//! omega = 0.02
//!
//! [algorithm]
//! alpha = 0.1
//! case = "case2"
//! p = 0.01
//! d = 0.01
//! horizon = 1000
//! ```
//!
//! Every scenario parameter has a default, so `[scenario.model]` may contain
//! only `name`. Schedules are lists of `{ kind = "...", ... }` primitives that
//! are summed.

pub mod feeder;
pub mod quadratic;
pub mod random;
pub mod routing;
pub mod static_constrained;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{
    AlgorithmConfig, DeclaredConstants, LinearPlant, Mismatch, NoiseModel, TimeVaryingProblem,
};
use crate::util::{domain, stream_rng};

pub use feeder::{scenario_feeder, FeederParams};
pub use quadratic::{scenario_quadratic_drift, QuadraticParams};
pub use random::random_spd_instance;
pub use routing::{scenario_routing, RoutingParams};
pub use static_constrained::{scenario_static, StaticParams};

/// Names accepted by [`ScenarioSpec::builtin`].
pub const BUILTIN: [&str; 4] = ["quadratic", "static", "routing", "feeder"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ScenarioModel {
    Quadratic(QuadraticParams),
    Static(StaticParams),
    Routing(RoutingParams),
    Feeder(FeederParams),
}

impl ScenarioModel {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioModel::Quadratic(_) => "quadratic",
            ScenarioModel::Static(_) => "static",
            ScenarioModel::Routing(_) => "routing",
            ScenarioModel::Feeder(_) => "feeder",
        }
    }
}

/// Relative model mismatch: `dC` and `dD` are Gaussian matrices rescaled to
/// spectral norms `scale ||C||` and `scale ||D||`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MismatchSpec {
    pub scale: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mismatch: Option<MismatchSpec>,
    /// Replaces the scenario's own declared constants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared: Option<DeclaredConstants>,
    pub model: ScenarioModel,
}

impl ScenarioSpec {
    pub fn new(model: ScenarioModel) -> Self {
        Self {
            seed: 0,
            noise: None,
            mismatch: None,
            declared: None,
            model,
        }
    }

    /// Default settings of a built-in scenario.
    pub fn builtin(name: &str) -> Result<Self> {
        let model = match name {
            "quadratic" => ScenarioModel::Quadratic(QuadraticParams::default()),
            "static" => ScenarioModel::Static(StaticParams::default()),
            "routing" => ScenarioModel::Routing(RoutingParams::default()),
            "feeder" => ScenarioModel::Feeder(FeederParams::default()),
            other => return Err(Error::UnknownScenario(other.to_string())),
        };
        let mut spec = Self::new(model);
        if name == "routing" {
            // variance 0.01 per measurement
            spec.noise = Some(NoiseModel::new(0.1, 1.0)?);
        }
        Ok(spec)
    }

    pub fn name(&self) -> &'static str {
        self.model.name()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_noise(mut self, noise: Option<NoiseModel>) -> Self {
        self.noise = noise;
        self
    }

    pub fn build(&self) -> Result<(TimeVaryingProblem, LinearPlant)> {
        let (mut problem, plant) = match &self.model {
            ScenarioModel::Quadratic(p) => scenario_quadratic_drift(p)?,
            ScenarioModel::Static(p) => scenario_static(p)?,
            ScenarioModel::Routing(p) => scenario_routing(p, self.seed)?,
            ScenarioModel::Feeder(p) => scenario_feeder(p)?,
        };
        let mut plant = plant.with_seed(self.seed);
        if let Some(noise) = self.noise {
            plant = plant.with_noise(NoiseModel::new(noise.std_dev, noise.cap)?);
        }
        if let Some(mm) = self.mismatch {
            let mm = mismatch(&plant, mm)?;
            plant = plant.with_mismatch(mm)?;
        }
        if let Some(decl) = &self.declared {
            problem = problem.with_declared(decl.clone());
        }
        Ok((problem, plant))
    }
}

fn mismatch(plant: &LinearPlant, spec: MismatchSpec) -> Result<Mismatch> {
    if !(spec.scale >= 0.0 && spec.scale.is_finite()) {
        return Err(Error::InvalidConfig(
            "mismatch scale must be finite and nonnegative".into(),
        ));
    }
    let mut rng = stream_rng(spec.seed, domain::FIXTURE, 1);
    let mut draw = |rows: usize, cols: usize, norm: f64| {
        let m = DMatrix::<f64>::from_fn(rows, cols, |_, _| rng.sample(StandardNormal));
        let s = crate::util::spectral_norm(&m, 1e-12);
        if s == 0.0 {
            m
        } else {
            m * (spec.scale * norm / s)
        }
    };
    let dc = draw(plant.m(), plant.n(), plant.c_norm());
    let dd_norm = crate::util::spectral_norm(plant.d(), 1e-12);
    let dd = draw(plant.m(), plant.w_dim(), dd_norm);
    Ok(Mismatch::new(dc, dd))
}

/// A scenario plus the algorithm settings to run it with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSpec,
    pub algorithm: AlgorithmConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        cfg.algorithm.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Built-in scenario with its default algorithm settings.
    pub fn builtin(name: &str) -> Result<Self> {
        Ok(Self {
            scenario: ScenarioSpec::builtin(name)?,
            algorithm: default_algorithm(name)?,
        })
    }
}

/// Default algorithm settings per built-in scenario.
pub fn default_algorithm(name: &str) -> Result<AlgorithmConfig> {
    match name {
        "quadratic" => AlgorithmConfig::case2(0.1, 0.01, 0.01, 1000),
        "static" => AlgorithmConfig::case2(0.1, 0.01, 0.01, 1000)?.with_dual_radius(10.0),
        "routing" => AlgorithmConfig::case2(0.5, 0.001, 0.001, 1000),
        "feeder" => AlgorithmConfig::case2(0.01, 0.01, 0.01, 1000),
        other => Err(Error::UnknownScenario(other.to_string())),
    }
}

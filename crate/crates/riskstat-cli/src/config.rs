//! Run configuration: one TOML file drives everything.
//!
//! ```toml
//! seed = 42
//!
//! [space]
//! k = [2, 1]
//!
//! [simple]
//! family = "weighted-sum"      # | "max" | "log-sum-exp" | "capped-weighted-sum"
//! weights = [1.0, 1.0]
//!
//! [clustering]
//! family = "neg-average"       # | "expm1"
//! gamma = [1.0, 1.0]
//!
//! suites = ["A1", "A2", "B1", "B2", "B3", "C1", "C2", "C3", "P1", "LevelSets", "WeakDuality"]
//!
//! [trials]
//! default = 10000
//!
//! [tolerances]
//! default = 1e-9
//! gap = 1e-9
//! ```
//!
//! Descriptors are validated against the catalog before any computation;
//! errors carry the config path of the offending field.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

use riskstat::compose::BisectionConfig;
use riskstat::{
    ClusteringFunction, ComplexRiskStatistic, DualSearchSpec, LinkFamily, PrimalGridSpec,
    ScenarioSpace, SimpleFamily, SimpleRiskStatistic,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: String,
        source: toml::de::Error,
    },
    #[error("config.{path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: &str, message: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        path: path.to_string(),
        message: message.to_string(),
    }
}

/// Verification suites the runner knows how to execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SuiteName {
    A1,
    A2,
    B1,
    B2,
    B3,
    C1,
    C2,
    C3,
    /// Acceptance-set convexity and f-/b-monotonicity of both sets.
    P1,
    LevelSets,
    WeakDuality,
}

impl SuiteName {
    pub const ALL: [SuiteName; 11] = [
        SuiteName::A1,
        SuiteName::A2,
        SuiteName::B1,
        SuiteName::B2,
        SuiteName::B3,
        SuiteName::C1,
        SuiteName::C2,
        SuiteName::C3,
        SuiteName::P1,
        SuiteName::LevelSets,
        SuiteName::WeakDuality,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SuiteName::A1 => "A1",
            SuiteName::A2 => "A2",
            SuiteName::B1 => "B1",
            SuiteName::B2 => "B2",
            SuiteName::B3 => "B3",
            SuiteName::C1 => "C1",
            SuiteName::C2 => "C2",
            SuiteName::C3 => "C3",
            SuiteName::P1 => "P1",
            SuiteName::LevelSets => "LevelSets",
            SuiteName::WeakDuality => "WeakDuality",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub k: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusteringConfig {
    pub family: LinkFamily,
    pub gamma: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trials {
    #[serde(default = "default_trials")]
    pub default: u64,
    #[serde(default, flatten)]
    pub per_suite: BTreeMap<String, u64>,
}

fn default_trials() -> u64 {
    10_000
}

impl Default for Trials {
    fn default() -> Self {
        Self {
            default: default_trials(),
            per_suite: BTreeMap::new(),
        }
    }
}

impl Trials {
    pub fn for_suite(&self, suite: SuiteName) -> u64 {
        self.per_suite
            .get(suite.as_str())
            .copied()
            .unwrap_or(self.default)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tolerances {
    #[serde(default = "default_tolerance")]
    pub default: f64,
    /// Largest acceptable duality gap for a clean exit code.
    #[serde(default = "default_tolerance")]
    pub gap: f64,
    /// Round-trip residual accepted by `decompose`.
    #[serde(default = "default_decompose_tolerance")]
    pub decompose: f64,
    #[serde(default, flatten)]
    pub per_suite: BTreeMap<String, f64>,
}

fn default_tolerance() -> f64 {
    1e-9
}

fn default_decompose_tolerance() -> f64 {
    1e-6
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            default: default_tolerance(),
            gap: default_tolerance(),
            decompose: default_decompose_tolerance(),
            per_suite: BTreeMap::new(),
        }
    }
}

impl Tolerances {
    pub fn for_suite(&self, suite: SuiteName) -> f64 {
        self.per_suite
            .get(suite.as_str())
            .copied()
            .unwrap_or(self.default)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    #[serde(default)]
    pub primal: PrimalGridSpecConfig,
    #[serde(default)]
    pub dual: DualSearchSpecConfig,
    #[serde(default)]
    pub bisection: BisectionConfigConfig,
}

/// Macro for grid-spec mirrors: partial TOML tables fall back to the
/// library defaults field by field.
macro_rules! mirror_config {
    ($name:ident => $target:ident { $($field:ident : $ty:ty),+ $(,)? }) => {
        #[derive(Debug, Clone, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name {
            $(pub $field: $ty,)+
        }

        impl Default for $name {
            fn default() -> Self {
                let d = <$target>::default();
                Self { $($field: d.$field),+ }
            }
        }

        impl From<&$name> for $target {
            fn from(c: &$name) -> Self {
                Self { $($field: c.$field),+ }
            }
        }
    };
}

mirror_config!(PrimalGridSpecConfig => PrimalGridSpec {
    lo: f64,
    hi: f64,
    step: f64,
});

mirror_config!(DualSearchSpecConfig => DualSearchSpec {
    ymax: f64,
    ystep: f64,
    blocksum_range: f64,
    blocksum_step: f64,
});

mirror_config!(BisectionConfigConfig => BisectionConfig {
    value_tol: f64,
    bracket_cap_exp: u32,
    max_iters: u32,
});

/// The full run configuration, echoed verbatim into every report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub space: SpaceConfig,
    pub simple: SimpleFamily,
    pub clustering: ClusteringConfig,
    #[serde(default = "default_suites")]
    pub suites: Vec<SuiteName>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub trials: Trials,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub grids: Grids,
}

fn default_suites() -> Vec<SuiteName> {
    SuiteName::ALL.to_vec()
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let config: RunConfig = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Validates descriptors against the catalog before any computation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.build_statistic()?;
        if self.grids.primal.step <= 0.0 {
            return Err(invalid("grids.primal.step", "step must be > 0"));
        }
        if self.grids.primal.lo < 0.0 || self.grids.primal.hi < self.grids.primal.lo {
            return Err(invalid("grids.primal", "need 0 <= lo <= hi"));
        }
        if self.grids.dual.ystep <= 0.0 || self.grids.dual.blocksum_step <= 0.0 {
            return Err(invalid("grids.dual", "grid steps must be > 0"));
        }
        Ok(())
    }

    pub fn space(&self) -> Result<ScenarioSpace, ConfigError> {
        ScenarioSpace::new(self.space.k.clone())
            .map_err(|e| invalid("space.k", e))
    }

    /// Builds the configured complex risk statistic.
    pub fn build_statistic(&self) -> Result<ComplexRiskStatistic, ConfigError> {
        let space = self.space()?;
        let simple = match &self.simple {
            SimpleFamily::WeightedSum { weights } => {
                SimpleRiskStatistic::weighted_sum(weights.clone())
                    .map_err(|e| invalid("simple.weights", e))?
            }
            SimpleFamily::Max => {
                SimpleRiskStatistic::max(space.d()).map_err(|e| invalid("simple", e))?
            }
            SimpleFamily::LogSumExp { temperature } => {
                SimpleRiskStatistic::log_sum_exp(space.d(), *temperature)
                    .map_err(|e| invalid("simple.temperature", e))?
            }
            SimpleFamily::CappedWeightedSum { weights, caps } => {
                SimpleRiskStatistic::capped_weighted_sum(weights.clone(), caps.clone())
                    .map_err(|e| invalid("simple", e))?
            }
        };
        if simple.d() != space.d() {
            return Err(invalid(
                "simple",
                format!(
                    "statistic dimension {} does not match space d = {}",
                    simple.d(),
                    space.d()
                ),
            ));
        }
        let clustering = ClusteringFunction::new(
            space,
            self.clustering.family,
            self.clustering.gamma.clone(),
        )
        .map_err(|e| invalid("clustering", e))?;
        ComplexRiskStatistic::compose(simple, clustering).map_err(|e| invalid("simple", e))
    }
}

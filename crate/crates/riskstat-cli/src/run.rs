//! Batch runner: suites, evaluations, diagnostics, one report.
//!
//! Stages always execute in the fixed order axioms -> eval -> primal ->
//! dual -> gap (-> decompose); a violation is recorded, never fatal. The
//! JSON report is byte-reproducible for a fixed `(config, seed, inputs)`
//! triple: wall-clock timings are kept out of it unless explicitly
//! requested (they go to the table output instead).

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;
use thiserror::Error;

use riskstat::report::ext_real;
use riskstat::{
    check_axiom, check_set_convexity, check_set_monotonicity, dual_evaluate, duality_gap,
    primal_evaluate, weak_duality_check, AcceptanceSet, AxiomReport, CheckId, ComplexRiskStatistic,
    Direction, DualPair, GapReport, PenaltyValue, PrimalReport, ScenarioVector, Subject,
};

use crate::config::{RunConfig, SuiteName};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("evaluation failed: {0}")]
    Eval(String),
}

impl From<riskstat::ComposeError> for RunError {
    fn from(e: riskstat::ComposeError) -> Self {
        RunError::Eval(e.to_string())
    }
}

impl From<riskstat::AxiomError> for RunError {
    fn from(e: riskstat::AxiomError) -> Self {
        RunError::Eval(e.to_string())
    }
}

/// Which stages a subcommand requests.
#[derive(Debug, Clone, Copy, Default)]
pub struct Stages {
    pub axioms: bool,
    pub primal: bool,
    pub dual: bool,
    pub gap: bool,
    pub decompose: bool,
}

impl Stages {
    pub fn eval_only() -> Self {
        Self::default()
    }

    pub fn everything() -> Self {
        Self {
            axioms: true,
            primal: true,
            dual: true,
            gap: true,
            decompose: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Versions {
    pub riskstat: String,
    pub cli: String,
}

/// One suite execution, labeled with its subject.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteRecord {
    pub suite: String,
    pub subject: String,
    #[serde(flatten)]
    pub report: AxiomReport,
}

/// Dual diagnostics for one input.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualRecord {
    #[serde(with = "ext_real")]
    pub value: f64,
    pub argmax: Option<DualPair>,
    #[serde(with = "ext_real")]
    pub alpha: f64,
    pub method: Option<riskstat::ConjugateMethod>,
    pub alpha_components: Option<PenaltyValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<GapReport>,
}

/// Decomposition round trip for one input.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecomposeRecord {
    pub reconstructed_image: Option<Vec<f64>>,
    #[serde(
        with = "ext_real_option",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub roundtrip_value: Option<f64>,
    #[serde(
        with = "ext_real_option",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

mod ext_real_option {
    use riskstat::report::ext_real;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => ext_real::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        ext_real::deserialize(d).map(Some)
    }
}

/// Per-input results in input order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub index: usize,
    #[serde(with = "ext_real")]
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub primal: Option<PrimalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dual: Option<DualRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decompose: Option<DecomposeRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub inputs: usize,
    pub total_violations: u64,
    pub total_skipped: u64,
    #[serde(
        with = "ext_real_option",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub max_gap: Option<f64>,
    pub gap_tolerance: f64,
    /// True when no suite recorded a violation and every measured gap is
    /// within tolerance; drives the process exit code.
    pub clean: bool,
}

/// The complete machine-readable run report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub versions: Versions,
    pub config: RunConfig,
    pub suites: Vec<SuiteRecord>,
    pub evaluations: Vec<EvaluationRecord>,
    pub summary: Summary,
    /// Wall-clock per stage; excluded by default so reports stay
    /// byte-reproducible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<BTreeMap<String, f64>>,
}

fn suite_seed(base: u64, index: u64) -> u64 {
    base.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Executes the requested stages over the inputs.
pub fn run(
    config: &RunConfig,
    inputs: &[ScenarioVector],
    stages: Stages,
    with_timings: bool,
) -> Result<RunReport, RunError> {
    let rho = config.build_statistic()?;
    let mut timings: BTreeMap<String, f64> = BTreeMap::new();

    let started = Instant::now();
    let suites = if stages.axioms {
        run_suites(config, &rho, inputs)?
    } else {
        Vec::new()
    };
    timings.insert("axioms".into(), started.elapsed().as_secs_f64() * 1e3);

    let primal_grid = (&config.grids.primal).into();
    let dual_spec = (&config.grids.dual).into();
    let bisection = (&config.grids.bisection).into();

    let started = Instant::now();
    let mut evaluations = Vec::with_capacity(inputs.len());
    for (index, input) in inputs.iter().enumerate() {
        let value = rho.eval(input)?;
        let primal = if stages.primal {
            Some(primal_evaluate(&rho, input, primal_grid)?)
        } else {
            None
        };
        let dual = if stages.dual {
            let report = dual_evaluate(&rho, input, &dual_spec)?;
            let gap = if stages.gap {
                Some(duality_gap(&rho, input, &dual_spec)?)
            } else {
                None
            };
            Some(DualRecord {
                value: report.value,
                argmax: report.argmax,
                alpha: report.alpha.as_ref().map_or(f64::INFINITY, |a| a.value),
                method: report.alpha.as_ref().map(|a| a.method),
                alpha_components: report.alpha,
                gap,
            })
        } else {
            None
        };
        let decompose = if stages.decompose {
            Some(decompose_record(&rho, input, &bisection))
        } else {
            None
        };
        evaluations.push(EvaluationRecord {
            index,
            value,
            primal,
            dual,
            decompose,
        });
    }
    timings.insert("eval".into(), started.elapsed().as_secs_f64() * 1e3);

    let total_violations: u64 = suites.iter().map(|s| s.report.violations).sum();
    let total_skipped: u64 = suites.iter().map(|s| s.report.skipped).sum();
    let decompose_misses = evaluations
        .iter()
        .filter_map(|e| e.decompose.as_ref())
        .filter(|d| {
            d.residual
                .is_some_and(|r| r > config.tolerances.decompose)
        })
        .count() as u64;
    let max_gap = evaluations
        .iter()
        .filter_map(|e| e.dual.as_ref().and_then(|d| d.gap.as_ref()))
        .map(|g| g.gap)
        .fold(None, |acc: Option<f64>, g| {
            Some(acc.map_or(g, |a| a.max(g)))
        });
    let clean = total_violations == 0
        && decompose_misses == 0
        && max_gap.is_none_or(|g| g <= config.tolerances.gap);

    Ok(RunReport {
        versions: Versions {
            riskstat: riskstat::VERSION.to_string(),
            cli: env!("CARGO_PKG_VERSION").to_string(),
        },
        config: config.clone(),
        suites,
        evaluations,
        summary: Summary {
            inputs: inputs.len(),
            total_violations: total_violations + decompose_misses,
            total_skipped,
            max_gap,
            gap_tolerance: config.tolerances.gap,
            clean,
        },
        timings_ms: with_timings.then_some(timings),
    })
}

fn run_suites(
    config: &RunConfig,
    rho: &ComplexRiskStatistic,
    inputs: &[ScenarioVector],
) -> Result<Vec<SuiteRecord>, RunError> {
    let mut records = Vec::new();
    // Fixed execution order; each suite derives its seed from its stable
    // position so results do not shift when other suites are toggled.
    let requested = SuiteName::ALL
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, s)| config.suites.contains(s));

    for (suite_index, suite) in requested {
        let suite = &suite;
        let seed = suite_seed(config.seed, suite_index as u64);
        let trials = config.trials.for_suite(*suite);
        let tolerance = config.tolerances.for_suite(*suite);
        match suite {
            SuiteName::A1 | SuiteName::A2 => {
                let check = if *suite == SuiteName::A1 {
                    CheckId::A1
                } else {
                    CheckId::A2
                };
                let report =
                    check_axiom(&Subject::Simple(rho.simple()), check, trials, seed, tolerance)?;
                records.push(SuiteRecord {
                    suite: suite.as_str().into(),
                    subject: "simple".into(),
                    report,
                });
            }
            SuiteName::B1 | SuiteName::B2 | SuiteName::B3 => {
                let check = match suite {
                    SuiteName::B1 => CheckId::B1,
                    SuiteName::B2 => CheckId::B2,
                    _ => CheckId::B3,
                };
                let report = check_axiom(
                    &Subject::Clustering(rho.clustering()),
                    check,
                    trials,
                    seed,
                    tolerance,
                )?;
                records.push(SuiteRecord {
                    suite: suite.as_str().into(),
                    subject: "clustering".into(),
                    report,
                });
            }
            SuiteName::C1 | SuiteName::C2 | SuiteName::C3 => {
                let check = match suite {
                    SuiteName::C1 => CheckId::C1,
                    SuiteName::C2 => CheckId::C2,
                    _ => CheckId::C3,
                };
                let report =
                    check_axiom(&Subject::Complex(rho), check, trials, seed, tolerance)?;
                records.push(SuiteRecord {
                    suite: suite.as_str().into(),
                    subject: "complex".into(),
                    report,
                });
            }
            SuiteName::P1 => {
                for (set, set_name) in [
                    (AcceptanceSet::Simple, "simple-set"),
                    (AcceptanceSet::Clustering, "clustering-set"),
                ] {
                    for (direction, label) in [
                        (Direction::Forward, "f-monotonicity"),
                        (Direction::Backward, "b-monotonicity"),
                    ] {
                        let report = check_set_monotonicity(
                            rho, set, direction, trials, seed, tolerance,
                        )?;
                        records.push(SuiteRecord {
                            suite: format!("P1/{label}"),
                            subject: set_name.into(),
                            report,
                        });
                    }
                    let report = check_set_convexity(rho, set, trials, seed, tolerance)?;
                    records.push(SuiteRecord {
                        suite: "P1/convexity".into(),
                        subject: set_name.into(),
                        report,
                    });
                }
            }
            SuiteName::LevelSets => {
                let report = rho.check_level_set_constancy(trials, seed, tolerance)?;
                records.push(SuiteRecord {
                    suite: suite.as_str().into(),
                    subject: "complex".into(),
                    report,
                });
            }
            SuiteName::WeakDuality => {
                for (index, input) in inputs.iter().enumerate() {
                    let report = weak_duality_check(
                        rho,
                        input,
                        trials,
                        suite_seed(seed, index as u64),
                        tolerance,
                    )?;
                    records.push(SuiteRecord {
                        suite: suite.as_str().into(),
                        subject: format!("input[{index}]"),
                        report,
                    });
                }
            }
        }
    }
    Ok(records)
}

fn decompose_record(
    rho: &ComplexRiskStatistic,
    input: &ScenarioVector,
    bisection: &riskstat::BisectionConfig,
) -> DecomposeRecord {
    let reconstructed = rho.reconstruct_clustering();
    let image = match reconstructed.eval(input) {
        Ok(image) => image,
        Err(e) => {
            return DecomposeRecord {
                reconstructed_image: None,
                roundtrip_value: None,
                residual: None,
                error: Some(e.to_string()),
            }
        }
    };
    match rho.reconstruct_simple(&image, bisection) {
        Ok(value) => {
            let direct = rho.eval(input).unwrap_or(f64::INFINITY);
            DecomposeRecord {
                reconstructed_image: Some(image.values().to_vec()),
                roundtrip_value: Some(value),
                residual: Some((value - direct).abs()),
                error: None,
            }
        }
        Err(e) => DecomposeRecord {
            reconstructed_image: Some(image.values().to_vec()),
            roundtrip_value: None,
            residual: None,
            error: Some(e.to_string()),
        },
    }
}

/// Exit code: 0 clean, 1 violations or gap beyond tolerance.
pub fn exit_code(report: &RunReport) -> i32 {
    if report.summary.clean {
        0
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use riskstat::ScenarioSpace;

    fn config() -> RunConfig {
        toml::from_str(
            r#"
            seed = 42
            [space]
            k = [2, 1]
            [simple]
            family = "weighted-sum"
            weights = [1.0, 1.0]
            [clustering]
            family = "neg-average"
            gamma = [1.0, 1.0]
            [trials]
            default = 200
        "#,
        )
        .unwrap()
    }

    fn inputs() -> Vec<ScenarioVector> {
        let space = ScenarioSpace::new(vec![2, 1]).unwrap();
        vec![ScenarioVector::from_flat(space, &[1.0, 3.0, 2.0]).unwrap()]
    }

    #[test]
    fn full_run_is_clean_for_the_linear_family() {
        let report = run(&config(), &inputs(), Stages::everything(), false).unwrap();
        assert_eq!(report.summary.total_violations, 0);
        assert!(report.summary.clean);
        assert_eq!(exit_code(&report), 0);
        assert_eq!(report.evaluations[0].value, -4.0);
        let gap = report.evaluations[0]
            .dual
            .as_ref()
            .unwrap()
            .gap
            .as_ref()
            .unwrap();
        assert!(gap.gap <= 1e-9);
        assert!(report.timings_ms.is_none());
    }

    #[test]
    fn empty_suite_list_gives_evaluations_only() {
        let mut cfg = config();
        cfg.suites.clear();
        let report = run(&cfg, &inputs(), Stages::everything(), false).unwrap();
        assert!(report.suites.is_empty());
        assert_eq!(report.evaluations.len(), 1);
    }

    #[test]
    fn reports_serialize_deterministically() {
        let a = run(&config(), &inputs(), Stages::everything(), false).unwrap();
        let b = run(&config(), &inputs(), Stages::everything(), false).unwrap();
        let ja = serde_json::to_string_pretty(&a).unwrap();
        let jb = serde_json::to_string_pretty(&b).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn decompose_stage_round_trips() {
        let stages = Stages {
            decompose: true,
            ..Stages::eval_only()
        };
        let report = run(&config(), &inputs(), stages, false).unwrap();
        let record = report.evaluations[0].decompose.as_ref().unwrap();
        assert!(record.error.is_none());
        assert!(record.residual.unwrap() <= 1e-6);
        assert_eq!(record.reconstructed_image.as_deref(), Some(&[-2.0, -2.0][..]));
    }
}

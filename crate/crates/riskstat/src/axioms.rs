//! Seeded property suites for the statistic axioms.
//!
//! `A1`/`A2` check monotonicity and convexity of a simple risk statistic,
//! `B1`-`B3` the block-sum monotonicity, convexity, and stored-witness
//! correlation of a clustering function, `C1`-`C3` the corresponding
//! properties of a composed statistic. Order-conditioned checks build
//! comparable pairs by construction (adding a nonnegative perturbation in
//! the appropriate order); the conditional-convexity check `C3` constructs
//! its witness by ray bisection and records unconstructible trials as
//! skipped rather than violated.

use thiserror::Error;

use crate::catalog::{ClusteringFunction, SimpleRiskStatistic};
use crate::compose::{BisectionConfig, ComplexRiskStatistic, ComposeError, DecomposeError};
use crate::report::{AxiomReport, CheckId, ReportBuilder};
use crate::sample;
use crate::scenario::{ComponentVector, ShapeError};

/// Axiom suite failure (not a violation: a misuse or evaluation error).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AxiomError {
    #[error("check {check} does not apply to this subject")]
    SubjectMismatch { check: CheckId },
    #[error(transparent)]
    Eval(#[from] ComposeError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

/// What a property suite runs against.
///
/// The `SimpleFn` variant admits arbitrary (unverified) functionals so the
/// suites can falsify intentionally broken statistics; it supports the `A`
/// checks only.
pub enum Subject<'a> {
    Simple(&'a SimpleRiskStatistic),
    Clustering(&'a ClusteringFunction),
    Complex(&'a ComplexRiskStatistic),
    SimpleFn {
        d: usize,
        eval: &'a dyn Fn(&ComponentVector) -> f64,
    },
}

/// Runs `trials` seeded trials of one axiom check against a subject.
pub fn check_axiom(
    subject: &Subject<'_>,
    check: CheckId,
    trials: u64,
    seed: u64,
    tolerance: f64,
) -> Result<AxiomReport, AxiomError> {
    match (subject, check) {
        (Subject::Simple(r), CheckId::A1) => {
            let d = r.d();
            check_a1(|x| r.eval(x).expect("dimension checked"), d, trials, seed, tolerance)
        }
        (Subject::Simple(r), CheckId::A2) => {
            let d = r.d();
            check_a2(|x| r.eval(x).expect("dimension checked"), d, trials, seed, tolerance)
        }
        (Subject::SimpleFn { d, eval }, CheckId::A1) => check_a1(eval, *d, trials, seed, tolerance),
        (Subject::SimpleFn { d, eval }, CheckId::A2) => check_a2(eval, *d, trials, seed, tolerance),
        (Subject::Clustering(f), CheckId::B1) => check_b1(f, trials, seed, tolerance),
        (Subject::Clustering(f), CheckId::B2) => check_b2(f, trials, seed, tolerance),
        (Subject::Clustering(f), CheckId::B3) => check_b3(f, trials, seed, tolerance),
        (Subject::Complex(rho), CheckId::C1) => check_c1(rho, trials, seed, tolerance),
        (Subject::Complex(rho), CheckId::C2) => check_c2(rho, trials, seed, tolerance),
        (Subject::Complex(rho), CheckId::C3) => check_c3(rho, trials, seed, tolerance),
        _ => Err(AxiomError::SubjectMismatch { check }),
    }
}

/// Margin of `lhs <= rhs` under extended-real conventions: infinite rhs can
/// never be violated, an infinite lhs against finite rhs always is.
fn leq_margin(lhs: f64, rhs: f64) -> f64 {
    if rhs == f64::INFINITY {
        f64::NEG_INFINITY
    } else if lhs == f64::INFINITY {
        f64::INFINITY
    } else {
        lhs - rhs
    }
}

fn check_a1(
    eval: impl Fn(&ComponentVector) -> f64,
    d: usize,
    trials: u64,
    seed: u64,
    tolerance: f64,
) -> Result<AxiomReport, AxiomError> {
    let mut builder = ReportBuilder::new(CheckId::A1, seed, tolerance);
    for trial in 0..trials {
        let mut rng = sample::trial_rng(seed, trial);
        let lower = sample::component_vector(&mut rng, d);
        let bump = sample::nonneg_component_vector(&mut rng, d);
        let upper = ComponentVector::new(
            lower
                .values()
                .iter()
                .zip(bump.values())
                .map(|(a, b)| a + b)
                .collect(),
        )?;
        // upper >= lower must give eval(upper) >= eval(lower)
        builder.record(leq_margin(eval(&lower), eval(&upper)));
    }
    Ok(builder.finish())
}

fn check_a2(
    eval: impl Fn(&ComponentVector) -> f64,
    d: usize,
    trials: u64,
    seed: u64,
    tolerance: f64,
) -> Result<AxiomReport, AxiomError> {
    let mut builder = ReportBuilder::new(CheckId::A2, seed, tolerance);
    for trial in 0..trials {
        let mut rng = sample::trial_rng(seed, trial);
        let x = sample::component_vector(&mut rng, d);
        let y = sample::component_vector(&mut rng, d);
        let lambda = sample::lambda(&mut rng);
        let mix = x.affine_combination(&y, lambda)?;
        let rhs = extended_combination(lambda, eval(&x), eval(&y));
        builder.record(leq_margin(eval(&mix), rhs));
    }
    Ok(builder.finish())
}

fn check_b1(
    f: &ClusteringFunction,
    trials: u64,
    seed: u64,
    tolerance: f64,
) -> Result<AxiomReport, AxiomError> {
    let mut builder = ReportBuilder::new(CheckId::B1, seed, tolerance);
    for trial in 0..trials {
        let mut rng = sample::trial_rng(seed, trial);
        let x = sample::scenario_vector(&mut rng, f.space());
        // Raising block sums moves the argument *down* the preorder: x
        // dominates y, so the clustering output must not increase.
        let y = x.add(&sample::nonneg_scenario_vector(&mut rng, f.space()))?;
        debug_assert!(x.preorder_geq(&y).unwrap());
        let fx = f.eval(&x).map_err(ComposeError::Catalog)?;
        let fy = f.eval(&y).map_err(ComposeError::Catalog)?;
        let margin = fy
            .values()
            .iter()
            .zip(fx.values())
            .map(|(a, b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max);
        builder.record(margin);
    }
    Ok(builder.finish())
}

fn check_b2(
    f: &ClusteringFunction,
    trials: u64,
    seed: u64,
    tolerance: f64,
) -> Result<AxiomReport, AxiomError> {
    let mut builder = ReportBuilder::new(CheckId::B2, seed, tolerance);
    for trial in 0..trials {
        let mut rng = sample::trial_rng(seed, trial);
        let x = sample::scenario_vector(&mut rng, f.space());
        let y = sample::scenario_vector(&mut rng, f.space());
        let lambda = sample::lambda(&mut rng);
        let mix = x.affine_combination(&y, lambda)?;
        let fmix = f.eval(&mix).map_err(ComposeError::Catalog)?;
        let fx = f.eval(&x).map_err(ComposeError::Catalog)?;
        let fy = f.eval(&y).map_err(ComposeError::Catalog)?;
        let margin = fmix
            .values()
            .iter()
            .zip(fx.values().iter().zip(fy.values()))
            .map(|(m, (a, b))| m - (lambda * a + (1.0 - lambda) * b))
            .fold(f64::NEG_INFINITY, f64::max);
        builder.record(margin);
    }
    Ok(builder.finish())
}

fn check_b3(
    f: &ClusteringFunction,
    trials: u64,
    seed: u64,
    tolerance: f64,
) -> Result<AxiomReport, AxiomError> {
    let witness = f.witness();
    let mut builder = ReportBuilder::new(CheckId::B3, seed, tolerance);
    for trial in 0..trials {
        let mut rng = sample::trial_rng(seed, trial);
        let x = sample::scenario_vector(&mut rng, f.space());
        let direct = f.eval(&x).map_err(ComposeError::Catalog)?;
        let mut margin = f64::NEG_INFINITY;
        for i in 0..f.d() {
            let embedded = f
                .eval(&x.block_embed(i)?)
                .map_err(ComposeError::Catalog)?;
            let through_witness = witness.eval(&embedded).map_err(ComposeError::Catalog)?;
            margin = margin.max((through_witness - direct.values()[i]).abs());
        }
        builder.record(margin);
    }
    Ok(builder.finish())
}

fn check_c1(
    rho: &ComplexRiskStatistic,
    trials: u64,
    seed: u64,
    tolerance: f64,
) -> Result<AxiomReport, AxiomError> {
    let mut builder = ReportBuilder::new(CheckId::C1, seed, tolerance);
    for trial in 0..trials {
        let mut rng = sample::trial_rng(seed, trial);
        let x = sample::scenario_vector(&mut rng, rho.space());
        let y = x.add(&sample::nonneg_scenario_vector(&mut rng, rho.space()))?;
        builder.record(leq_margin(rho.eval(&y)?, rho.eval(&x)?));
    }
    Ok(builder.finish())
}

fn check_c2(
    rho: &ComplexRiskStatistic,
    trials: u64,
    seed: u64,
    tolerance: f64,
) -> Result<AxiomReport, AxiomError> {
    let mut builder = ReportBuilder::new(CheckId::C2, seed, tolerance);
    for trial in 0..trials {
        let mut rng = sample::trial_rng(seed, trial);
        let x = sample::scenario_vector(&mut rng, rho.space());
        let y = sample::scenario_vector(&mut rng, rho.space());
        let lambda = sample::lambda(&mut rng);
        let mix = x.affine_combination(&y, lambda)?;
        let rhs = extended_combination(lambda, rho.eval(&x)?, rho.eval(&y)?);
        builder.record(leq_margin(rho.eval(&mix)?, rhs));
    }
    Ok(builder.finish())
}

fn check_c3(
    rho: &ComplexRiskStatistic,
    trials: u64,
    seed: u64,
    tolerance: f64,
) -> Result<AxiomReport, AxiomError> {
    let cfg = BisectionConfig::default();
    let mut builder = ReportBuilder::new(CheckId::C3, seed, tolerance);
    for trial in 0..trials {
        let mut rng = sample::trial_rng(seed, trial);
        let x = sample::scenario_vector(&mut rng, rho.space());
        let y = sample::scenario_vector(&mut rng, rho.space());
        let lambda = sample::lambda(&mut rng);
        let z = match rho.construct_c3_witness(&x, &y, lambda, &cfg) {
            Ok(z) => z,
            Err(
                DecomposeError::SectionUnavailable { .. }
                | DecomposeError::NotInImage { .. }
                | DecomposeError::InfiniteTarget { .. },
            ) => {
                builder.skip();
                continue;
            }
            Err(DecomposeError::Eval(e)) => return Err(e.into()),
        };
        // The witness construction is part of the contract: its embedded
        // risks must hit the convex-combination targets to 1e-9, else the
        // trial counts as a construction failure.
        let mut witness_ok = true;
        for i in 0..rho.d() {
            let zi = rho.eval(&z.block_embed(i)?)?;
            let xi = rho.eval(&x.block_embed(i)?)?;
            let yi = rho.eval(&y.block_embed(i)?)?;
            let target = lambda * xi + (1.0 - lambda) * yi;
            let residual = (zi - target).abs();
            if residual.is_nan() || residual > 1e-9 {
                witness_ok = false;
                break;
            }
        }
        if !witness_ok {
            builder.skip();
            continue;
        }
        let rhs = extended_combination(lambda, rho.eval(&x)?, rho.eval(&y)?);
        builder.record(leq_margin(rho.eval(&z)?, rhs));
    }
    Ok(builder.finish())
}

/// `lambda * a + (1 - lambda) * b` with `0 * inf = 0` at the endpoints.
fn extended_combination(lambda: f64, a: f64, b: f64) -> f64 {
    if a == f64::INFINITY && lambda > 0.0 {
        return f64::INFINITY;
    }
    if b == f64::INFINITY && lambda < 1.0 {
        return f64::INFINITY;
    }
    if a == f64::INFINITY || b == f64::INFINITY {
        // endpoint cases: the infinite side has zero weight
        return if a == f64::INFINITY { b } else { a };
    }
    lambda * a + (1.0 - lambda) * b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{core_clustering_families, core_simple_families, LinkFamily};
    use crate::scenario::{ScenarioSpace, ScenarioVector};

    #[test]
    fn catalog_simple_statistics_pass_a_checks() {
        for r in core_simple_families(3) {
            for check in [CheckId::A1, CheckId::A2] {
                let report =
                    check_axiom(&Subject::Simple(&r), check, 500, 42, 1e-9).unwrap();
                assert_eq!(report.violations, 0, "{check} violated by {:?}", r.family());
            }
        }
    }

    #[test]
    fn catalog_clustering_functions_pass_b_checks() {
        let space = ScenarioSpace::new(vec![2, 1]).unwrap();
        for f in core_clustering_families(&space) {
            for check in [CheckId::B1, CheckId::B2, CheckId::B3] {
                let report =
                    check_axiom(&Subject::Clustering(&f), check, 500, 43, 1e-9).unwrap();
                assert_eq!(report.violations, 0, "{check} violated by {:?}", f.family());
            }
        }
    }

    #[test]
    fn broken_statistic_fails_a1() {
        let eval = |x: &ComponentVector| -x.values()[0];
        let subject = Subject::SimpleFn { d: 1, eval: &eval };
        let report = check_axiom(&subject, CheckId::A1, 200, 44, 1e-9).unwrap();
        assert!(report.violations > 0);
        assert!(report.worst_margin > 0.0);
    }

    #[test]
    fn zero_trials_yield_empty_report() {
        let r = SimpleRiskStatistic::max(2).unwrap();
        let report = check_axiom(&Subject::Simple(&r), CheckId::A1, 0, 45, 1e-9).unwrap();
        assert_eq!(report.trials, 0);
        assert_eq!(report.violations, 0);
    }

    #[test]
    fn subject_mismatch_is_rejected() {
        let r = SimpleRiskStatistic::max(2).unwrap();
        let err = check_axiom(&Subject::Simple(&r), CheckId::B1, 10, 46, 1e-9).unwrap_err();
        assert!(matches!(err, AxiomError::SubjectMismatch { .. }));
    }

    #[test]
    fn linear_composition_passes_c_checks() {
        let space = ScenarioSpace::new(vec![2, 1]).unwrap();
        let rho = ComplexRiskStatistic::compose(
            SimpleRiskStatistic::weighted_sum(vec![1.0, 1.0]).unwrap(),
            ClusteringFunction::new(space, LinkFamily::NegAverage, vec![1.0, 1.0]).unwrap(),
        )
        .unwrap();
        for check in [CheckId::C1, CheckId::C2, CheckId::C3] {
            let report = check_axiom(&Subject::Complex(&rho), check, 500, 47, 1e-9).unwrap();
            assert_eq!(report.violations, 0, "{check} violated");
            if check == CheckId::C3 {
                assert_eq!(report.skipped, 0);
            }
        }
    }

    #[test]
    fn max_composition_c3_skips_flat_ray_witnesses() {
        let space = ScenarioSpace::new(vec![2, 1]).unwrap();
        let rho = ComplexRiskStatistic::compose(
            SimpleRiskStatistic::max(2).unwrap(),
            ClusteringFunction::new(space, LinkFamily::NegAverage, vec![1.0, 1.0]).unwrap(),
        )
        .unwrap();
        let report = check_axiom(&Subject::Complex(&rho), CheckId::C3, 200, 48, 1e-9).unwrap();
        assert_eq!(report.skipped, report.trials);
        assert_eq!(report.violations, 0);
    }

    #[test]
    fn log_sum_exp_composition_violates_c3() {
        // The conditional-convexity axiom fails for strictly convex simple
        // statistics: hold the witness construction to its contract and the
        // inequality breaks on an open set of inputs.
        let space = ScenarioSpace::new(vec![1, 1]).unwrap();
        let rho = ComplexRiskStatistic::compose(
            SimpleRiskStatistic::log_sum_exp(2, 1.0).unwrap(),
            ClusteringFunction::new(space.clone(), LinkFamily::NegAverage, vec![1.0, 1.0])
                .unwrap(),
        )
        .unwrap();

        // Hand counterexample: X = 0, Y = (-2, -2), lambda = 1/2.
        let x = ScenarioVector::zeros(space.clone());
        let y = ScenarioVector::new(space, vec![vec![-2.0], vec![-2.0]]).unwrap();
        let z = rho
            .construct_c3_witness(&x, &y, 0.5, &BisectionConfig::default())
            .unwrap();
        let lhs = rho.eval(&z).unwrap();
        let rhs = 0.5 * rho.eval(&x).unwrap() + 0.5 * rho.eval(&y).unwrap();
        assert!(
            lhs > rhs + 0.1,
            "expected a clear violation, got lhs = {lhs}, rhs = {rhs}"
        );

        let report = check_axiom(&Subject::Complex(&rho), CheckId::C3, 2000, 49, 1e-9).unwrap();
        assert!(report.violations > 0);
    }
}

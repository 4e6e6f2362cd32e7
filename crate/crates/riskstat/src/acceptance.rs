//! Acceptance sets and the primal representation.
//!
//! A simple statistic accepts a pair `(c, x)` when `rho_simple(x) <= c`; a
//! clustering function accepts `(y, X)` when `clustering(X) <= y`
//! componentwise. Both sets are convex and monotone in each slot, and the
//! composed statistic is the infimum of budgets `c` that can be linked to
//! the input through both sets (empty feasible set means `+inf`).
//!
//! The grid evaluator exists as an independent oracle for that infimum: it
//! searches intermediate vectors `x >= clustering(X)` directly instead of
//! composing, so a non-monotone statistic would be caught by the two paths
//! disagreeing.

use serde::{Deserialize, Serialize};

use crate::catalog::{ClusteringFunction, SimpleRiskStatistic};
use crate::compose::{ComplexRiskStatistic, ComposeError};
use crate::report::{ext_real, AxiomReport, CheckId, ReportBuilder};
use crate::sample;
use crate::scenario::{ComponentVector, ScenarioVector};

/// Membership of `(c, x)` in the simple acceptance set.
pub fn accepts_simple(
    r: &SimpleRiskStatistic,
    c: f64,
    x: &ComponentVector,
) -> Result<bool, ComposeError> {
    let value = r.eval(x).map_err(ComposeError::Catalog)?;
    Ok(value <= c)
}

/// Membership of `(y, X)` in the clustering acceptance set.
pub fn accepts_clustering(
    f: &ClusteringFunction,
    y: &ComponentVector,
    x: &ScenarioVector,
) -> Result<bool, ComposeError> {
    let image = f.eval(x).map_err(ComposeError::Catalog)?;
    Ok(image.leq(y)?)
}

/// Which acceptance set a property check targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AcceptanceSet {
    /// Pairs `(c, x)` with `rho_simple(x) <= c`.
    Simple,
    /// Pairs `(y, X)` with `clustering(X) <= y`.
    Clustering,
}

/// Monotonicity direction for acceptance-set checks: `Forward` lowers the
/// second slot in its order, `Backward` raises the first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Forward,
    Backward,
}

/// Checks that sampled members stay members when moved per the direction.
///
/// For the clustering set's second slot the order is the block-sum
/// preorder: partners are built from the member by raising block sums.
pub fn check_set_monotonicity(
    rho: &ComplexRiskStatistic,
    set: AcceptanceSet,
    direction: Direction,
    trials: u64,
    seed: u64,
    tolerance: f64,
) -> Result<AxiomReport, ComposeError> {
    let check = match direction {
        Direction::Forward => CheckId::SetFMonotonicity,
        Direction::Backward => CheckId::SetBMonotonicity,
    };
    let mut builder = ReportBuilder::new(check, seed, tolerance);
    for trial in 0..trials {
        let mut rng = sample::trial_rng(seed, trial);
        match set {
            AcceptanceSet::Simple => {
                let r = rho.simple();
                let x = sample::component_vector(&mut rng, r.d());
                let value = r.eval(&x).map_err(ComposeError::Catalog)?;
                if !value.is_finite() {
                    builder.skip();
                    continue;
                }
                let c = value + sample::uniform(&mut rng, 0.0, sample::ENTRY_RANGE);
                match direction {
                    Direction::Forward => {
                        let drop = sample::nonneg_component_vector(&mut rng, r.d());
                        let q = ComponentVector::new(
                            x.values()
                                .iter()
                                .zip(drop.values())
                                .map(|(a, b)| a - b)
                                .collect(),
                        )?;
                        let vq = r.eval(&q).map_err(ComposeError::Catalog)?;
                        builder.record(if vq.is_finite() { vq - c } else { f64::INFINITY });
                    }
                    Direction::Backward => {
                        let p = c + sample::uniform(&mut rng, 0.0, sample::ENTRY_RANGE);
                        builder.record(value - p);
                    }
                }
            }
            AcceptanceSet::Clustering => {
                let f = rho.clustering();
                let x = sample::scenario_vector(&mut rng, f.space());
                let image = f.eval(&x).map_err(ComposeError::Catalog)?;
                let slack = sample::nonneg_component_vector(&mut rng, f.d());
                let y = ComponentVector::new(
                    image
                        .values()
                        .iter()
                        .zip(slack.values())
                        .map(|(a, b)| a + b)
                        .collect(),
                )?;
                match direction {
                    Direction::Forward => {
                        // x dominates q in the block-sum preorder.
                        let q = x.add(&sample::nonneg_scenario_vector(&mut rng, f.space()))?;
                        debug_assert!(x.preorder_geq(&q).unwrap());
                        let image_q = f.eval(&q).map_err(ComposeError::Catalog)?;
                        let margin = image_q
                            .values()
                            .iter()
                            .zip(y.values())
                            .map(|(a, b)| a - b)
                            .fold(f64::NEG_INFINITY, f64::max);
                        builder.record(margin);
                    }
                    Direction::Backward => {
                        let bump = sample::nonneg_component_vector(&mut rng, f.d());
                        let p = ComponentVector::new(
                            y.values()
                                .iter()
                                .zip(bump.values())
                                .map(|(a, b)| a + b)
                                .collect(),
                        )?;
                        let margin = image
                            .values()
                            .iter()
                            .zip(p.values())
                            .map(|(a, b)| a - b)
                            .fold(f64::NEG_INFINITY, f64::max);
                        builder.record(margin);
                    }
                }
            }
        }
    }
    Ok(builder.finish())
}

/// Checks that convex combinations of sampled members stay members.
pub fn check_set_convexity(
    rho: &ComplexRiskStatistic,
    set: AcceptanceSet,
    trials: u64,
    seed: u64,
    tolerance: f64,
) -> Result<AxiomReport, ComposeError> {
    let mut builder = ReportBuilder::new(CheckId::SetConvexity, seed, tolerance);
    for trial in 0..trials {
        let mut rng = sample::trial_rng(seed, trial);
        match set {
            AcceptanceSet::Simple => {
                let r = rho.simple();
                let x1 = sample::component_vector(&mut rng, r.d());
                let x2 = sample::component_vector(&mut rng, r.d());
                let v1 = r.eval(&x1).map_err(ComposeError::Catalog)?;
                let v2 = r.eval(&x2).map_err(ComposeError::Catalog)?;
                if !v1.is_finite() || !v2.is_finite() {
                    builder.skip();
                    continue;
                }
                let c1 = v1 + sample::uniform(&mut rng, 0.0, sample::ENTRY_RANGE);
                let c2 = v2 + sample::uniform(&mut rng, 0.0, sample::ENTRY_RANGE);
                let lambda = sample::lambda(&mut rng);
                let mix = x1.affine_combination(&x2, lambda)?;
                let vm = r.eval(&mix).map_err(ComposeError::Catalog)?;
                let budget = lambda * c1 + (1.0 - lambda) * c2;
                builder.record(if vm.is_finite() { vm - budget } else { f64::INFINITY });
            }
            AcceptanceSet::Clustering => {
                let f = rho.clustering();
                let x1 = sample::scenario_vector(&mut rng, f.space());
                let x2 = sample::scenario_vector(&mut rng, f.space());
                let mk_budget = |image: &ComponentVector, rng: &mut rand_chacha::ChaCha8Rng| {
                    ComponentVector::new(
                        image
                            .values()
                            .iter()
                            .map(|&v| v + sample::uniform(rng, 0.0, sample::ENTRY_RANGE))
                            .collect(),
                    )
                };
                let y1 = mk_budget(&f.eval(&x1).map_err(ComposeError::Catalog)?, &mut rng)?;
                let y2 = mk_budget(&f.eval(&x2).map_err(ComposeError::Catalog)?, &mut rng)?;
                let lambda = sample::lambda(&mut rng);
                let mix = x1.affine_combination(&x2, lambda)?;
                let budget = y1.affine_combination(&y2, lambda)?;
                let image = f.eval(&mix).map_err(ComposeError::Catalog)?;
                let margin = image
                    .values()
                    .iter()
                    .zip(budget.values())
                    .map(|(a, b)| a - b)
                    .fold(f64::NEG_INFINITY, f64::max);
                builder.record(margin);
            }
        }
    }
    Ok(builder.finish())
}

/// Grid for the intermediate-vector search of [`primal_evaluate`]: offsets
/// `[lo, hi]` with spacing `step` are added to `clustering(X)` in every
/// coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimalGridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for PrimalGridSpec {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: 5.0,
            step: 0.05,
        }
    }
}

impl PrimalGridSpec {
    fn validate(&self, d: usize) -> Result<(), ComposeError> {
        if self.step.is_nan() || self.step <= 0.0 || !self.step.is_finite() {
            return Err(ComposeError::InvalidGrid(format!(
                "step {} must be finite and > 0",
                self.step
            )));
        }
        if self.lo.is_nan() || self.hi.is_nan() || self.lo < 0.0 || self.hi < self.lo || !self.hi.is_finite() {
            return Err(ComposeError::InvalidGrid(format!(
                "need 0 <= lo <= hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        let per_dim = ((self.hi - self.lo) / self.step).floor() + 1.0;
        if per_dim.powi(d as i32) > 2e7 {
            return Err(ComposeError::InvalidGrid(format!(
                "{per_dim} points per dimension at d = {d} is over the search budget"
            )));
        }
        Ok(())
    }

    fn offsets(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step).floor() as usize;
        (0..=n).map(|j| self.lo + j as f64 * self.step).collect()
    }
}

/// Result of the two-route primal evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalReport {
    /// `rho(X)` through the composition (the exact infimum).
    #[serde(with = "ext_real")]
    pub analytic: f64,
    /// Best budget found by the feasible-set grid search (`+inf` when no
    /// grid point is feasible).
    #[serde(with = "ext_real")]
    pub numeric: f64,
    /// `numeric - analytic` (zero when both are infinite).
    #[serde(with = "ext_real")]
    pub gap: f64,
    pub grid: PrimalGridSpec,
    /// Set when the grid cannot certify the infimum (e.g. its corner
    /// excludes `clustering(X)`).
    pub warning: Option<String>,
}

/// Evaluates the composed statistic two ways: through the composition and
/// by direct grid search for the cheapest budget `c` with `(c, x)` accepted
/// by the simple set and `(x, X)` by the clustering set.
pub fn primal_evaluate(
    rho: &ComplexRiskStatistic,
    x: &ScenarioVector,
    grid: PrimalGridSpec,
) -> Result<PrimalReport, ComposeError> {
    grid.validate(rho.d())?;
    let analytic = rho.eval(x)?;
    let base = rho.clustering().eval(x).map_err(ComposeError::Catalog)?;
    let d = rho.d();
    let offsets = grid.offsets();

    let warning = if grid.lo > 0.0 {
        Some(format!(
            "grid offsets start at {} > 0: the feasible corner is outside the grid",
            grid.lo
        ))
    } else {
        None
    };

    // Lexicographic sweep over the offset grid; the minimum is reduced in a
    // fixed order so ties resolve to the lexicographically first point.
    let mut numeric = f64::INFINITY;
    let mut index = vec![0usize; d];
    let mut point = vec![0.0; d];
    'sweep: loop {
        for (slot, &oi) in index.iter().enumerate() {
            point[slot] = base.values()[slot] + offsets[oi];
        }
        let candidate = ComponentVector::new(point.clone())?;
        let value = rho.simple().eval(&candidate).map_err(ComposeError::Catalog)?;
        if value < numeric {
            numeric = value;
        }
        // advance the odometer
        for slot in (0..d).rev() {
            index[slot] += 1;
            if index[slot] < offsets.len() {
                continue 'sweep;
            }
            index[slot] = 0;
        }
        break;
    }

    let gap = match (analytic.is_finite(), numeric.is_finite()) {
        (true, true) => numeric - analytic,
        (false, false) => 0.0,
        _ => f64::INFINITY,
    };
    Ok(PrimalReport {
        analytic,
        numeric,
        gap,
        grid,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::LinkFamily;
    use crate::scenario::ScenarioSpace;

    fn linear_rho() -> ComplexRiskStatistic {
        let space = ScenarioSpace::new(vec![2, 1]).unwrap();
        ComplexRiskStatistic::compose(
            SimpleRiskStatistic::weighted_sum(vec![1.0, 1.0]).unwrap(),
            ClusteringFunction::new(space, LinkFamily::NegAverage, vec![1.0, 1.0]).unwrap(),
        )
        .unwrap()
    }

    fn x_132() -> ScenarioVector {
        ScenarioVector::new(
            ScenarioSpace::new(vec![2, 1]).unwrap(),
            vec![vec![1.0, 3.0], vec![2.0]],
        )
        .unwrap()
    }

    #[test]
    fn accepts_simple_examples() {
        let ws = SimpleRiskStatistic::weighted_sum(vec![1.0, 1.0]).unwrap();
        let x = ComponentVector::new(vec![1.0, 2.0]).unwrap();
        assert!(accepts_simple(&ws, 6.0, &x).unwrap());
        assert!(accepts_simple(&ws, 3.0, &x).unwrap()); // boundary
        let mx = SimpleRiskStatistic::max(2).unwrap();
        let z = ComponentVector::new(vec![1.0, -5.0]).unwrap();
        assert!(!accepts_simple(&mx, 0.0, &z).unwrap());
    }

    #[test]
    fn membership_is_tight_at_the_boundary() {
        // (rho(x), x) is a member; shaving 1e-6 off the budget breaks it.
        for r in crate::catalog::core_simple_families(3) {
            for trial in 0..50u64 {
                let mut rng = crate::sample::trial_rng(9, trial);
                let x = crate::sample::component_vector(&mut rng, 3);
                let value = r.eval(&x).unwrap();
                assert!(accepts_simple(&r, value, &x).unwrap());
                assert!(!accepts_simple(&r, value - 1e-6, &x).unwrap());
            }
        }
    }

    #[test]
    fn infinite_value_is_never_accepted_at_finite_budget() {
        let capped =
            SimpleRiskStatistic::capped_weighted_sum(vec![1.0], vec![0.0]).unwrap();
        let x = ComponentVector::new(vec![1.0]).unwrap();
        assert!(!accepts_simple(&capped, 1e12, &x).unwrap());
    }

    #[test]
    fn accepts_clustering_examples() {
        let rho = linear_rho();
        let f = rho.clustering();
        let x = x_132();
        let boundary = ComponentVector::new(vec![-2.0, -2.0]).unwrap();
        assert!(accepts_clustering(f, &boundary, &x).unwrap());
        let above = ComponentVector::new(vec![-1.0, -1.0]).unwrap();
        assert!(accepts_clustering(f, &above, &x).unwrap());
        let below = ComponentVector::new(vec![-3.0, -3.0]).unwrap();
        assert!(!accepts_clustering(f, &below, &x).unwrap());
    }

    #[test]
    fn set_checks_pass_for_the_catalog() {
        let rho = linear_rho();
        for set in [AcceptanceSet::Simple, AcceptanceSet::Clustering] {
            for direction in [Direction::Forward, Direction::Backward] {
                let report =
                    check_set_monotonicity(&rho, set, direction, 400, 3, 1e-9).unwrap();
                assert_eq!(report.violations, 0, "{set:?} {direction:?}");
            }
            let report = check_set_convexity(&rho, set, 400, 3, 1e-9).unwrap();
            assert_eq!(report.violations, 0, "{set:?} convexity");
        }
    }

    #[test]
    fn primal_two_routes_agree_on_the_linear_family() {
        let rho = linear_rho();
        let report = primal_evaluate(&rho, &x_132(), PrimalGridSpec::default()).unwrap();
        assert_eq!(report.analytic, -4.0);
        assert_eq!(report.analytic, rho.eval(&x_132()).unwrap());
        assert!(report.numeric >= report.analytic);
        assert!(report.gap <= 0.15);
        assert!(report.warning.is_none());
    }

    #[test]
    fn primal_zero_input_is_zero() {
        let rho = linear_rho();
        let zero = ScenarioVector::zeros(rho.space().clone());
        let report = primal_evaluate(&rho, &zero, PrimalGridSpec::default()).unwrap();
        assert_eq!(report.analytic, 0.0);
        assert_eq!(report.numeric, 0.0);
    }

    #[test]
    fn empty_feasible_set_returns_infinity() {
        // A capped simple statistic whose domain excludes the clustering
        // image: every linking vector x >= clustering(X) is off-domain.
        let space = ScenarioSpace::new(vec![2, 1]).unwrap();
        let rho = ComplexRiskStatistic::compose(
            SimpleRiskStatistic::capped_weighted_sum(vec![1.0, 1.0], vec![-10.0, -10.0]).unwrap(),
            ClusteringFunction::new(space, LinkFamily::NegAverage, vec![1.0, 1.0]).unwrap(),
        )
        .unwrap();
        let report = primal_evaluate(&rho, &x_132(), PrimalGridSpec::default()).unwrap();
        assert_eq!(report.analytic, f64::INFINITY);
        assert_eq!(report.numeric, f64::INFINITY);
        assert_eq!(report.gap, 0.0);
    }

    #[test]
    fn degenerate_grids_are_rejected() {
        let rho = linear_rho();
        let bad_step = PrimalGridSpec { lo: 0.0, hi: 5.0, step: 0.0 };
        assert!(matches!(
            primal_evaluate(&rho, &x_132(), bad_step),
            Err(ComposeError::InvalidGrid(_))
        ));
        let inverted = PrimalGridSpec { lo: 3.0, hi: 1.0, step: 0.5 };
        assert!(matches!(
            primal_evaluate(&rho, &x_132(), inverted),
            Err(ComposeError::InvalidGrid(_))
        ));
        let oversized = PrimalGridSpec { lo: 0.0, hi: 5.0, step: 1e-9 };
        assert!(matches!(
            primal_evaluate(&rho, &x_132(), oversized),
            Err(ComposeError::InvalidGrid(_))
        ));
    }

    #[test]
    fn shifted_grid_warns_and_still_returns_analytic() {
        let rho = linear_rho();
        let grid = PrimalGridSpec {
            lo: 1.0,
            hi: 5.0,
            step: 0.5,
        };
        let report = primal_evaluate(&rho, &x_132(), grid).unwrap();
        assert_eq!(report.analytic, -4.0);
        assert!(report.warning.is_some());
        assert!(report.numeric > report.analytic);
    }
}

//! Parametric catalogs of simple risk statistics and clustering functions.
//!
//! Every catalog member satisfies its axioms by construction and carries a
//! closed-form Fenchel conjugate and (for clustering functions) an analytic
//! section, so downstream verification can compare against ground truth.
//!
//! Extended reals: a statistic may evaluate to `f64::INFINITY`, which
//! propagates through arithmetic and comparisons with the usual IEEE
//! conventions. Conjugate-domain membership tests compare floats exactly
//! (no tolerance), matching the exact-predicate policy of
//! [`crate::scenario`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{ComponentVector, ScenarioSpace, ScenarioVector, ShapeError};

/// Catalog validation or evaluation failure.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("statistic has dimension {expected}, argument has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("clustering function is defined on space {expected:?}, argument lives in {got:?}")]
    SpaceMismatch {
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("weighted-sum weight {value} at position {index} (weights must be finite and >= 0)")]
    InvalidWeight { index: usize, value: f64 },
    #[error("cap {value} at position {index} is not finite")]
    InvalidCap { index: usize, value: f64 },
    #[error("temperature {0} (must be finite and > 0)")]
    InvalidTemperature(f64),
    #[error("scale gamma[{index}] = {value} (must be finite and > 0)")]
    InvalidScale { index: usize, value: f64 },
    #[error("statistic needs dimension >= 1")]
    ZeroDimension,
    #[error("parameter list has length {got}, dimension is {expected}")]
    ParamLen { expected: usize, got: usize },
    #[error("component {component}: value {value} outside the link range {range}")]
    SectionOutOfRange {
        component: usize,
        value: f64,
        range: &'static str,
    },
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

/// Families of simple risk statistics on `R^d`.
///
/// All members are monotone (componentwise) and convex. `CappedWeightedSum`
/// is the one extended-real member: it evaluates to `+inf` outside its box
/// domain and exists to exercise the infeasible branches of the primal and
/// dual machinery; it is not part of [`core_simple_families`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SimpleFamily {
    /// `x -> <w, x>` with `w >= 0`.
    WeightedSum { weights: Vec<f64> },
    /// `x -> max_i x_i`.
    Max,
    /// `x -> tau * ln(sum_i exp(x_i / tau))`.
    LogSumExp { temperature: f64 },
    /// `x -> <w, x>` on `{x <= caps}`, `+inf` elsewhere.
    CappedWeightedSum { weights: Vec<f64>, caps: Vec<f64> },
}

/// A monotone convex functional `R^d -> R u {+inf}` from the catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpleRiskStatistic {
    d: usize,
    #[serde(flatten)]
    family: SimpleFamily,
}

impl SimpleRiskStatistic {
    /// `x -> <w, x>`, `w >= 0` componentwise.
    pub fn weighted_sum(weights: Vec<f64>) -> Result<Self, CatalogError> {
        if weights.is_empty() {
            return Err(CatalogError::ZeroDimension);
        }
        for (index, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(CatalogError::InvalidWeight { index, value: w });
            }
        }
        Ok(Self {
            d: weights.len(),
            family: SimpleFamily::WeightedSum { weights },
        })
    }

    /// `x -> max_i x_i` on `R^d`.
    pub fn max(d: usize) -> Result<Self, CatalogError> {
        if d == 0 {
            return Err(CatalogError::ZeroDimension);
        }
        Ok(Self {
            d,
            family: SimpleFamily::Max,
        })
    }

    /// `x -> tau * ln(sum exp(x_i / tau))`, `tau > 0`.
    pub fn log_sum_exp(d: usize, temperature: f64) -> Result<Self, CatalogError> {
        if d == 0 {
            return Err(CatalogError::ZeroDimension);
        }
        if !temperature.is_finite() || temperature <= 0.0 {
            return Err(CatalogError::InvalidTemperature(temperature));
        }
        Ok(Self {
            d,
            family: SimpleFamily::LogSumExp { temperature },
        })
    }

    /// Weighted sum restricted to the lower box `{x <= caps}`.
    pub fn capped_weighted_sum(weights: Vec<f64>, caps: Vec<f64>) -> Result<Self, CatalogError> {
        let base = Self::weighted_sum(weights)?;
        let SimpleFamily::WeightedSum { weights } = base.family else {
            unreachable!()
        };
        if caps.len() != weights.len() {
            return Err(CatalogError::ParamLen {
                expected: weights.len(),
                got: caps.len(),
            });
        }
        for (index, &c) in caps.iter().enumerate() {
            if !c.is_finite() {
                return Err(CatalogError::InvalidCap { index, value: c });
            }
        }
        Ok(Self {
            d: weights.len(),
            family: SimpleFamily::CappedWeightedSum { weights, caps },
        })
    }

    /// The all-ones weighted sum, used as the stored correlation witness of
    /// every catalog clustering function.
    pub fn ones_witness(d: usize) -> Result<Self, CatalogError> {
        Self::weighted_sum(vec![1.0; d])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn family(&self) -> &SimpleFamily {
        &self.family
    }

    fn check_dim(&self, x: &ComponentVector) -> Result<(), CatalogError> {
        if x.len() != self.d {
            return Err(CatalogError::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Evaluates the statistic; `+inf` is a legitimate value.
    pub fn eval(&self, x: &ComponentVector) -> Result<f64, CatalogError> {
        self.check_dim(x)?;
        let v = x.values();
        Ok(match &self.family {
            SimpleFamily::WeightedSum { weights } => dot(weights, v),
            SimpleFamily::Max => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            SimpleFamily::LogSumExp { temperature } => log_sum_exp(v, *temperature),
            SimpleFamily::CappedWeightedSum { weights, caps } => {
                if v.iter().zip(caps).all(|(xi, ci)| xi <= ci) {
                    dot(weights, v)
                } else {
                    f64::INFINITY
                }
            }
        })
    }

    /// Closed-form Fenchel conjugate `sup_x { <yhat, x> - eval(x) }`.
    ///
    /// Domain membership is exact: a weighted sum requires `yhat == w`
    /// bitwise, `max` and `log-sum-exp` require `yhat >= 0` with
    /// `sum(yhat) == 1.0` exactly. Candidate generators that must land in
    /// these domains construct their points accordingly.
    pub fn conjugate(&self, yhat: &ComponentVector) -> Result<f64, CatalogError> {
        self.check_dim(yhat)?;
        let y = yhat.values();
        Ok(match &self.family {
            SimpleFamily::WeightedSum { weights } => {
                if y.iter().zip(weights).all(|(a, b)| a == b) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            SimpleFamily::Max => {
                if on_probability_simplex(y) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            SimpleFamily::LogSumExp { temperature } => {
                if on_probability_simplex(y) {
                    temperature * y.iter().map(|&p| xlnx(p)).sum::<f64>()
                } else {
                    f64::INFINITY
                }
            }
            SimpleFamily::CappedWeightedSum { weights, caps } => {
                if y.iter().zip(weights).all(|(yi, wi)| yi >= wi) {
                    y.iter()
                        .zip(weights)
                        .zip(caps)
                        .map(|((yi, wi), ci)| ci * (yi - wi))
                        .sum()
                } else {
                    f64::INFINITY
                }
            }
        })
    }

    /// Value at the embedding `(0, .., v, .., 0)` with `v` in slot `i`.
    pub fn eval_embedded(&self, i: usize, v: f64) -> f64 {
        match &self.family {
            SimpleFamily::WeightedSum { weights } => weights[i] * v,
            SimpleFamily::Max => {
                if self.d == 1 {
                    v
                } else {
                    v.max(0.0)
                }
            }
            SimpleFamily::LogSumExp { temperature } => {
                // tau * ln((d-1) + e^{v/tau}), stabilized for large v
                let t = *temperature;
                let others = (self.d - 1) as f64;
                if v / t > 0.0 {
                    v + t * (others * (-v / t).exp()).ln_1p()
                } else {
                    t * ((v / t).exp() + others).ln()
                }
            }
            SimpleFamily::CappedWeightedSum { weights, caps } => {
                let zeros_ok = caps
                    .iter()
                    .enumerate()
                    .all(|(l, &c)| l == i || 0.0 <= c);
                if zeros_ok && v <= caps[i] {
                    weights[i] * v
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Whether `v -> eval_embedded(i, v)` is strictly increasing (on its
    /// effective domain). Flat embedded slices make decomposition sections
    /// unavailable.
    pub fn embedded_strictly_monotone(&self, i: usize) -> bool {
        match &self.family {
            SimpleFamily::WeightedSum { weights } => weights[i] > 0.0,
            SimpleFamily::Max => self.d == 1,
            SimpleFamily::LogSumExp { .. } => true,
            SimpleFamily::CappedWeightedSum { weights, caps } => {
                weights[i] > 0.0 && caps.iter().enumerate().all(|(l, &c)| l == i || 0.0 <= c)
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn log_sum_exp(v: &[f64], tau: f64) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = v.iter().map(|&x| ((x - m) / tau).exp()).sum();
    m + tau * sum.ln()
}

fn xlnx(p: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * p.ln()
    }
}

fn on_probability_simplex(y: &[f64]) -> bool {
    y.iter().all(|&p| p >= 0.0) && y.iter().sum::<f64>() == 1.0
}

/// The verified core families at dimension `d` (canonical parameters).
pub fn core_simple_families(d: usize) -> Vec<SimpleRiskStatistic> {
    vec![
        SimpleRiskStatistic::weighted_sum(vec![1.0; d]).expect("d >= 1"),
        SimpleRiskStatistic::max(d).expect("d >= 1"),
        SimpleRiskStatistic::log_sum_exp(d, 1.0).expect("d >= 1"),
    ]
}

/// Blockwise link families for clustering functions.
///
/// Both links are convex, strictly decreasing, and satisfy `h(0) = 0`, so
/// monotonicity (in the block-sum preorder), convexity, and the correlation
/// property with the stored all-ones witness hold by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkFamily {
    /// `h(u) = -u`: component `i` maps to `-gamma_i * mean(block i)`.
    NegAverage,
    /// `h(u) = exp(-u) - 1`: bounded below by `-gamma_i`, image `(-gamma_i, inf)`.
    Expm1,
}

impl LinkFamily {
    /// The scalar link `h`. Written to return `+0.0` at `u = 0` so that
    /// embedded blocks contribute exact zeros.
    pub fn apply(self, u: f64) -> f64 {
        match self {
            LinkFamily::NegAverage => 0.0 - u,
            LinkFamily::Expm1 => (-u).exp_m1() + 0.0,
        }
    }

    /// Inverse link; `None` when `v` is outside the image of `h`.
    pub fn invert(self, v: f64) -> Option<f64> {
        match self {
            LinkFamily::NegAverage => Some(-v),
            LinkFamily::Expm1 => {
                if v > -1.0 {
                    Some(-v.ln_1p())
                } else {
                    None
                }
            }
        }
    }

    /// Derivative `h'(u)`, used by the duality touching construction.
    pub fn derivative(self, u: f64) -> f64 {
        match self {
            LinkFamily::NegAverage => -1.0,
            LinkFamily::Expm1 => -(-u).exp(),
        }
    }

    fn range_desc(self) -> &'static str {
        match self {
            LinkFamily::NegAverage => "(-inf, inf)",
            LinkFamily::Expm1 => "(-gamma_i, inf) i.e. x_i / gamma_i > -1",
        }
    }
}

/// A blockwise clustering map `R^{k_1} x .. x R^{k_d} -> R^d` from the
/// catalog: component `i` is `gamma_i * h(s_i / k_i)` with `s` the block
/// sums. The correlation witness (the all-ones weighted sum) is stored
/// explicitly, one witness serving all inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringFunction {
    space: ScenarioSpace,
    family: LinkFamily,
    gamma: Vec<f64>,
    witness: SimpleRiskStatistic,
}

impl ClusteringFunction {
    pub fn new(
        space: ScenarioSpace,
        family: LinkFamily,
        gamma: Vec<f64>,
    ) -> Result<Self, CatalogError> {
        if gamma.len() != space.d() {
            return Err(CatalogError::ParamLen {
                expected: space.d(),
                got: gamma.len(),
            });
        }
        for (index, &g) in gamma.iter().enumerate() {
            if !g.is_finite() || g <= 0.0 {
                return Err(CatalogError::InvalidScale { index, value: g });
            }
        }
        let witness = SimpleRiskStatistic::ones_witness(space.d())?;
        Ok(Self {
            space,
            family,
            gamma,
            witness,
        })
    }

    pub fn space(&self) -> &ScenarioSpace {
        &self.space
    }

    pub fn d(&self) -> usize {
        self.space.d()
    }

    pub fn family(&self) -> LinkFamily {
        self.family
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// The stored correlation witness.
    pub fn witness(&self) -> &SimpleRiskStatistic {
        &self.witness
    }

    fn check_space(&self, x: &ScenarioVector) -> Result<(), CatalogError> {
        if x.space() != &self.space {
            return Err(CatalogError::SpaceMismatch {
                expected: self.space.block_lens().to_vec(),
                got: x.space().block_lens().to_vec(),
            });
        }
        Ok(())
    }

    /// Evaluates the clustering map. Depends on the input only through its
    /// block sums: within-block redistributions leave the output unchanged.
    pub fn eval(&self, x: &ScenarioVector) -> Result<ComponentVector, CatalogError> {
        self.check_space(x)?;
        let sums = x.block_sums();
        let values = sums
            .values()
            .iter()
            .zip(self.space.block_lens())
            .zip(&self.gamma)
            .map(|((&s, &k), &g)| g * self.family.apply(s / k as f64))
            .collect();
        Ok(ComponentVector::new(values)?)
    }

    /// Component `i` of the output as a function of the block sum `s_i`.
    pub fn component_of_block_sum(&self, i: usize, s: f64) -> f64 {
        self.gamma[i] * self.family.apply(s / self.space.block_len(i) as f64)
    }

    /// A right inverse: the constant-block preimage of `x`, each block `i`
    /// filled with `h^{-1}(x_i / gamma_i)`. Rejects components outside the
    /// link range, naming the offender.
    pub fn section(&self, x: &ComponentVector) -> Result<ScenarioVector, CatalogError> {
        if x.len() != self.d() {
            return Err(CatalogError::DimensionMismatch {
                expected: self.d(),
                got: x.len(),
            });
        }
        let mut t = Vec::with_capacity(self.d());
        for (component, (&xi, &g)) in x.values().iter().zip(&self.gamma).enumerate() {
            match self.family.invert(xi / g) {
                Some(ti) => t.push(ti),
                None => {
                    return Err(CatalogError::SectionOutOfRange {
                        component,
                        value: xi,
                        range: self.family.range_desc(),
                    })
                }
            }
        }
        Ok(ScenarioVector::constant_blocks(self.space.clone(), &t)?)
    }
}

/// The catalog link families with canonical unit scales on a space.
pub fn core_clustering_families(space: &ScenarioSpace) -> Vec<ClusteringFunction> {
    let gamma = vec![1.0; space.d()];
    vec![
        ClusteringFunction::new(space.clone(), LinkFamily::NegAverage, gamma.clone())
            .expect("valid space"),
        ClusteringFunction::new(space.clone(), LinkFamily::Expm1, gamma).expect("valid space"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(values: &[f64]) -> ComponentVector {
        ComponentVector::new(values.to_vec()).unwrap()
    }

    fn sv(k: &[usize], blocks: &[&[f64]]) -> ScenarioVector {
        ScenarioVector::new(
            ScenarioSpace::new(k.to_vec()).unwrap(),
            blocks.iter().map(|b| b.to_vec()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn eval_simple_examples() {
        let ws = SimpleRiskStatistic::weighted_sum(vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(ws.eval(&cv(&[1.0, 2.0, 3.0])).unwrap(), 6.0);

        let mx = SimpleRiskStatistic::max(3).unwrap();
        assert_eq!(mx.eval(&cv(&[-1.0, 4.0, 2.0])).unwrap(), 4.0);

        let lse = SimpleRiskStatistic::log_sum_exp(2, 1.0).unwrap();
        let v = lse.eval(&cv(&[0.0, 0.0])).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn eval_capped_goes_infinite_off_domain() {
        let c = SimpleRiskStatistic::capped_weighted_sum(vec![1.0, 2.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(c.eval(&cv(&[0.5, 1.0])).unwrap(), 2.5);
        assert_eq!(c.eval(&cv(&[1.5, 0.0])).unwrap(), f64::INFINITY);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let ws = SimpleRiskStatistic::weighted_sum(vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            ws.eval(&cv(&[1.0])),
            Err(CatalogError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn conjugate_examples() {
        let ws = SimpleRiskStatistic::weighted_sum(vec![1.0, 1.0]).unwrap();
        assert_eq!(ws.conjugate(&cv(&[1.0, 1.0])).unwrap(), 0.0);
        assert_eq!(ws.conjugate(&cv(&[1.0, 0.5])).unwrap(), f64::INFINITY);

        let mx = SimpleRiskStatistic::max(2).unwrap();
        assert_eq!(mx.conjugate(&cv(&[0.5, 0.5])).unwrap(), 0.0);
        assert_eq!(mx.conjugate(&cv(&[0.6, 0.6])).unwrap(), f64::INFINITY);
        assert_eq!(mx.conjugate(&cv(&[-0.5, 1.5])).unwrap(), f64::INFINITY);

        let lse = SimpleRiskStatistic::log_sum_exp(2, 1.0).unwrap();
        assert_eq!(lse.conjugate(&cv(&[1.0, 0.0])).unwrap(), 0.0);
        let v = lse.conjugate(&cv(&[0.5, 0.5])).unwrap();
        assert!((v + std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn clustering_eval_examples() {
        let space = ScenarioSpace::new(vec![2, 1]).unwrap();
        let f = ClusteringFunction::new(space, LinkFamily::NegAverage, vec![1.0, 1.0]).unwrap();
        let x = sv(&[2, 1], &[&[1.0, 3.0], &[2.0]]);
        assert_eq!(f.eval(&x).unwrap().values(), &[-2.0, -2.0]);

        let zero = ScenarioVector::zeros(f.space().clone());
        assert_eq!(f.eval(&zero).unwrap().values(), &[0.0, 0.0]);

        let space1 = ScenarioSpace::new(vec![1]).unwrap();
        let g = ClusteringFunction::new(space1, LinkFamily::Expm1, vec![1.0]).unwrap();
        assert_eq!(g.eval(&sv(&[1], &[&[0.0]])).unwrap().values(), &[0.0]);
        let ln2 = std::f64::consts::LN_2;
        let v = g.eval(&sv(&[1], &[&[-ln2]])).unwrap();
        assert!((v.values()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn section_examples() {
        let space = ScenarioSpace::new(vec![2, 1]).unwrap();
        let f =
            ClusteringFunction::new(space.clone(), LinkFamily::NegAverage, vec![1.0, 1.0]).unwrap();
        let sec = f.section(&cv(&[-2.0, -2.0])).unwrap();
        assert_eq!(sec.blocks(), &[vec![2.0, 2.0], vec![2.0]]);
        assert_eq!(f.section(&cv(&[0.0, 0.0])).unwrap(), ScenarioVector::zeros(space));

        let space1 = ScenarioSpace::new(vec![1]).unwrap();
        let g = ClusteringFunction::new(space1, LinkFamily::Expm1, vec![1.0]).unwrap();
        let sec = g.section(&cv(&[1.0])).unwrap();
        assert!((sec.blocks()[0][0] + std::f64::consts::LN_2).abs() < 1e-15);

        let err = g.section(&cv(&[-1.0])).unwrap_err();
        assert!(matches!(
            err,
            CatalogError::SectionOutOfRange { component: 0, .. }
        ));
    }

    #[test]
    fn section_is_right_inverse() {
        let space = ScenarioSpace::new(vec![3, 2]).unwrap();
        for f in core_clustering_families(&space) {
            let x = cv(&[0.7, -0.3]);
            let sec = f.section(&x).unwrap();
            let back = f.eval(&sec).unwrap();
            for (a, b) in back.values().iter().zip(x.values()) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn clustering_sees_only_block_sums() {
        let space = ScenarioSpace::new(vec![2, 1]).unwrap();
        for f in core_clustering_families(&space) {
            let x = sv(&[2, 1], &[&[1.0, 3.0], &[2.0]]);
            let y = sv(&[2, 1], &[&[3.0, 1.0], &[2.0]]);
            assert_eq!(f.eval(&x).unwrap(), f.eval(&y).unwrap());
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SimpleRiskStatistic::weighted_sum(vec![1.0, -0.1]).is_err());
        assert!(SimpleRiskStatistic::log_sum_exp(2, 0.0).is_err());
        assert!(SimpleRiskStatistic::max(0).is_err());
        let space = ScenarioSpace::new(vec![2]).unwrap();
        assert!(ClusteringFunction::new(space.clone(), LinkFamily::NegAverage, vec![0.0]).is_err());
        assert!(
            ClusteringFunction::new(space, LinkFamily::NegAverage, vec![1.0, 1.0]).is_err()
        );
    }

    #[test]
    fn embedded_eval_matches_full_eval() {
        let lse = SimpleRiskStatistic::log_sum_exp(3, 0.7).unwrap();
        for &v in &[-4.0, -0.5, 0.0, 2.5, 30.0] {
            for i in 0..3 {
                let mut full = vec![0.0; 3];
                full[i] = v;
                let expect = lse.eval(&cv(&full)).unwrap();
                let got = lse.eval_embedded(i, v);
                assert!((expect - got).abs() <= 1e-12 * expect.abs().max(1.0));
            }
        }
        let mx = SimpleRiskStatistic::max(2).unwrap();
        assert_eq!(mx.eval_embedded(0, -3.0), 0.0);
        assert_eq!(mx.eval_embedded(0, 3.0), 3.0);
        assert!(!mx.embedded_strictly_monotone(0));
        let mx1 = SimpleRiskStatistic::max(1).unwrap();
        assert!(mx1.embedded_strictly_monotone(0));
    }
}

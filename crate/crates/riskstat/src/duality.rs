//! Dual representation of composed risk statistics.
//!
//! A dual variable is a pair `(yhat, Xhat)`; the value of `rho(X)` is the
//! supremum of `<Xhat, X> - alpha(yhat, Xhat)` over pairs with finite
//! penalty `alpha`. Because the block inner product sees a scenario vector
//! only through its block sums, `Xhat` is canonicalized to its per-block
//! sums `Shat` ([`DualPair`]), collapsing the search to `2d` numbers.
//!
//! The penalty is a supremum over both acceptance sets. Both sets attain it
//! on their graphs, so after the sign screens (`yhat >= 0`, budget
//! coefficient `-1`) it splits into the simple statistic's conjugate at
//! `yhat` plus one one-dimensional conjugate per block:
//!
//! ```text
//! alpha(yhat, Shat) = conj_simple(yhat) + sum_i sup_s { Shat_i * s - yhat_i * phi_i(s) }
//! ```
//!
//! where `phi_i(s)` is clustering component `i` as a function of the block
//! sum. The per-block suprema have closed forms for both catalog links; a
//! grid fallback over `[-G, G]` serves as an independent oracle. Every
//! finite-penalty pair certifies a lower bound on `rho(X)` (weak duality);
//! the analytic candidate built from the conjugate domain attains it for
//! the catalog families.

use serde::{Deserialize, Serialize};

use crate::catalog::{LinkFamily, SimpleFamily, SimpleRiskStatistic};
use crate::compose::{ComplexRiskStatistic, ComposeError};
use crate::report::{ext_real, AxiomReport, CheckId, ReportBuilder};
use crate::sample;
use crate::scenario::{ComponentVector, ScenarioVector, ShapeError};

/// A canonicalized dual variable: `yhat` in `R^d` plus the block-sum
/// representation of `Xhat`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPair {
    pub yhat: ComponentVector,
    pub xhat_block_sums: ComponentVector,
}

impl DualPair {
    pub fn new(yhat: ComponentVector, xhat_block_sums: ComponentVector) -> Result<Self, ShapeError> {
        if yhat.len() != xhat_block_sums.len() {
            return Err(ShapeError::LengthMismatch {
                left: yhat.len(),
                right: xhat_block_sums.len(),
            });
        }
        Ok(Self {
            yhat,
            xhat_block_sums,
        })
    }

    /// Canonicalizes a full scenario-space dual vector to its block sums.
    pub fn from_scenario(yhat: ComponentVector, xhat: &ScenarioVector) -> Result<Self, ShapeError> {
        Self::new(yhat, xhat.block_sums())
    }

    fn lex_key(&self) -> impl Iterator<Item = f64> + '_ {
        self.yhat
            .values()
            .iter()
            .chain(self.xhat_block_sums.values())
            .copied()
    }

    fn lex_less(&self, other: &Self) -> bool {
        for (a, b) in self.lex_key().zip(other.lex_key()) {
            if a < b {
                return true;
            }
            if a > b {
                return false;
            }
        }
        false
    }
}

/// Search-grid parameters for the dual side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualSearchSpec {
    /// Per-component `yhat` grid upper end.
    pub ymax: f64,
    /// Per-component `yhat` grid spacing.
    pub ystep: f64,
    /// Block-sum grid fallback range `[-G, G]`.
    pub blocksum_range: f64,
    /// Block-sum grid fallback spacing.
    pub blocksum_step: f64,
}

impl Default for DualSearchSpec {
    fn default() -> Self {
        Self {
            ymax: 4.0,
            ystep: 0.05,
            blocksum_range: 50.0,
            blocksum_step: 0.05,
        }
    }
}

impl DualSearchSpec {
    fn validate(&self) -> Result<(), ComposeError> {
        for (name, value) in [("ystep", self.ystep), ("blocksum_step", self.blocksum_step)] {
            if value.is_nan() || value <= 0.0 || !value.is_finite() {
                return Err(ComposeError::InvalidGrid(format!(
                    "{name} {value} must be finite and > 0"
                )));
            }
        }
        for (name, value) in [("ymax", self.ymax), ("blocksum_range", self.blocksum_range)] {
            if value.is_nan() || value < 0.0 || !value.is_finite() {
                return Err(ComposeError::InvalidGrid(format!(
                    "{name} {value} must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }
}

/// How the per-block conjugates of a penalty were computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConjugateMethod {
    ClosedForm,
    Grid,
}

/// The penalty `alpha` at one dual pair, with its two components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyValue {
    #[serde(with = "ext_real")]
    pub value: f64,
    pub method: ConjugateMethod,
    /// Conjugate of the simple statistic at `yhat`.
    #[serde(with = "ext_real")]
    pub simple_conjugate: f64,
    /// Conjugate of `yhat . clustering` at the block sums.
    #[serde(with = "ext_real")]
    pub clustering_conjugate: f64,
    /// Names the unbounded direction when the supremum is `+inf`.
    pub unbounded: Option<String>,
}

impl PenaltyValue {
    fn unbounded(direction: String, simple_conjugate: f64, method: ConjugateMethod) -> Self {
        Self {
            value: f64::INFINITY,
            method,
            simple_conjugate,
            clustering_conjugate: f64::INFINITY,
            unbounded: Some(direction),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// The matching block sum that keeps the neg-average per-block conjugate
/// finite. Shared by the finiteness test and the candidate constructor so
/// the two agree bitwise.
fn neg_average_matching_shat(gamma_i: f64, yhat_i: f64, k_i: f64) -> f64 {
    -(gamma_i * yhat_i) / k_i
}

/// Per-block conjugate `sup_s { a*s - b*h(s/k) }` in closed form.
/// `a` is the dual block sum, `b = yhat_i * gamma_i >= 0`.
fn block_conjugate_closed(link: LinkFamily, a: f64, b: f64, k: f64) -> Result<f64, String> {
    match link {
        LinkFamily::NegAverage => {
            // objective (a + b/k) * s: finite only at exact cancellation
            if a == -b / k {
                Ok(0.0)
            } else {
                Err("nonzero net block-sum coefficient, linear direction unbounded".into())
            }
        }
        LinkFamily::Expm1 => {
            if a > 0.0 {
                Err("positive block-sum coefficient, unbounded as the block sum grows".into())
            } else if a == 0.0 {
                Ok(b)
            } else if b == 0.0 {
                Err("negative block-sum coefficient with zero weight, unbounded as the block sum falls".into())
            } else {
                // stationary point s* = -k ln(-a k / b)
                let ratio = (-a) * k / b;
                Ok(-a * k * ratio.ln() + a * k + b)
            }
        }
    }
}

/// Per-block conjugate by grid search over `s` in `[-G, G]`, after the same
/// unboundedness screens as the closed form.
fn block_conjugate_grid(
    link: LinkFamily,
    a: f64,
    b: f64,
    k: f64,
    spec: &DualSearchSpec,
) -> Result<f64, String> {
    match link {
        LinkFamily::NegAverage => {
            if a != -b / k {
                return Err("nonzero net block-sum coefficient, linear direction unbounded".into());
            }
        }
        LinkFamily::Expm1 => {
            if a > 0.0 {
                return Err("positive block-sum coefficient, unbounded as the block sum grows".into());
            }
            if a < 0.0 && b == 0.0 {
                return Err(
                    "negative block-sum coefficient with zero weight, unbounded as the block sum falls"
                        .into(),
                );
            }
        }
    }
    let g = spec.blocksum_range;
    let n = (2.0 * g / spec.blocksum_step).floor() as usize;
    let mut best = f64::NEG_INFINITY;
    for j in 0..=n {
        let s = -g + j as f64 * spec.blocksum_step;
        let value = a * s - b * link.apply(s / k);
        if value > best {
            best = value;
        }
    }
    Ok(best)
}

fn alpha_with(
    rho: &ComplexRiskStatistic,
    pair: &DualPair,
    method: ConjugateMethod,
    spec: &DualSearchSpec,
) -> Result<PenaltyValue, ComposeError> {
    let d = rho.d();
    if pair.yhat.len() != d {
        return Err(ComposeError::Catalog(
            crate::catalog::CatalogError::DimensionMismatch {
                expected: d,
                got: pair.yhat.len(),
            },
        ));
    }
    let simple_conjugate = rho.simple().conjugate(&pair.yhat).map_err(ComposeError::Catalog)?;
    if let Some(i) = pair.yhat.values().iter().position(|&v| v < 0.0) {
        return Ok(PenaltyValue::unbounded(
            format!("yhat[{i}] < 0: acceptance-budget slot unbounded above"),
            simple_conjugate,
            method,
        ));
    }
    if simple_conjugate == f64::INFINITY {
        return Ok(PenaltyValue {
            value: f64::INFINITY,
            method,
            simple_conjugate,
            clustering_conjugate: 0.0,
            unbounded: Some("simple conjugate infinite at yhat".into()),
        });
    }

    let clustering = rho.clustering();
    let mut clustering_conjugate = 0.0;
    for i in 0..d {
        let a = pair.xhat_block_sums.values()[i];
        let b = pair.yhat.values()[i] * clustering.gamma()[i];
        let k = clustering.space().block_len(i) as f64;
        let block = match method {
            ConjugateMethod::ClosedForm => block_conjugate_closed(clustering.family(), a, b, k),
            ConjugateMethod::Grid => block_conjugate_grid(clustering.family(), a, b, k, spec),
        };
        match block {
            Ok(v) => clustering_conjugate += v,
            Err(direction) => {
                return Ok(PenaltyValue::unbounded(
                    format!("block {i}: {direction}"),
                    simple_conjugate,
                    method,
                ));
            }
        }
    }
    Ok(PenaltyValue {
        value: simple_conjugate + clustering_conjugate,
        method,
        simple_conjugate,
        clustering_conjugate,
        unbounded: None,
    })
}

/// The penalty `alpha(yhat, Shat)`, closed form.
///
/// Returns `+inf` (never an error) on unbounded directions, with the
/// direction named in the flag.
pub fn penalty_alpha(
    rho: &ComplexRiskStatistic,
    pair: &DualPair,
) -> Result<PenaltyValue, ComposeError> {
    alpha_with(rho, pair, ConjugateMethod::ClosedForm, &DualSearchSpec::default())
}

/// The penalty with the per-block suprema evaluated on a grid; independent
/// oracle for [`penalty_alpha`] (it can only undershoot the closed form).
pub fn penalty_alpha_grid(
    rho: &ComplexRiskStatistic,
    pair: &DualPair,
    spec: &DualSearchSpec,
) -> Result<PenaltyValue, ComposeError> {
    spec.validate()?;
    alpha_with(rho, pair, ConjugateMethod::Grid, spec)
}

/// The block sums that make the pair `(yhat, Shat)` tight at `x`: block `i`
/// carries the derivative of `yhat_i * phi_i` at the observed block sum.
/// For the neg-average link this is the unique finite-penalty choice.
pub fn matching_block_sums(
    rho: &ComplexRiskStatistic,
    yhat: &ComponentVector,
    x: &ScenarioVector,
) -> Result<ComponentVector, ComposeError> {
    let clustering = rho.clustering();
    let sums = x.block_sums();
    let mut shat = Vec::with_capacity(rho.d());
    for i in 0..rho.d() {
        let gamma_i = clustering.gamma()[i];
        let k = clustering.space().block_len(i) as f64;
        let value = match clustering.family() {
            LinkFamily::NegAverage => {
                neg_average_matching_shat(gamma_i, yhat.values()[i], k)
            }
            LinkFamily::Expm1 => {
                let u = sums.values()[i] / k;
                yhat.values()[i] * gamma_i / k * LinkFamily::Expm1.derivative(u)
            }
        };
        shat.push(value);
    }
    ComponentVector::new(shat).map_err(ComposeError::Shape)
}

/// The conjugate-domain candidate `yhat*` for the simple statistic at the
/// clustering image of `x`: the weight vector for weighted sums, the
/// argmax vertex for `max`, the softmax point for `log-sum-exp` (snapped
/// onto the exact simplex).
pub fn analytic_yhat(
    simple: &SimpleRiskStatistic,
    image: &ComponentVector,
) -> Option<ComponentVector> {
    let d = simple.d();
    match simple.family() {
        SimpleFamily::WeightedSum { weights } => {
            Some(ComponentVector::new(weights.clone()).expect("weights are finite"))
        }
        SimpleFamily::CappedWeightedSum { weights, .. } => {
            Some(ComponentVector::new(weights.clone()).expect("weights are finite"))
        }
        SimpleFamily::Max => {
            let argmax = image
                .values()
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite"))
                .map(|(i, _)| i)?;
            let mut vertex = vec![0.0; d];
            vertex[argmax] = 1.0;
            Some(ComponentVector::new(vertex).expect("vertex is finite"))
        }
        SimpleFamily::LogSumExp { temperature } => {
            let m = image.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = image
                .values()
                .iter()
                .map(|&v| ((v - m) / temperature).exp())
                .collect();
            let total: f64 = weights.iter().sum();
            let softmax: Vec<f64> = weights.iter().map(|w| w / total).collect();
            let snapped = sample::snap_to_simplex(softmax)?;
            Some(ComponentVector::new(snapped).expect("softmax is finite"))
        }
    }
}

fn grid_values(step: f64, max: f64) -> Vec<f64> {
    let n = (max / step).floor() as usize;
    (0..=n).map(|j| j as f64 * step).collect()
}

/// Candidate `yhat` vectors for the dual search: the analytic candidate
/// plus a deterministic grid. Simplex-constrained families get exact
/// simplex grids (refining the step refines the candidate set, so the dual
/// value is monotone under refinement).
fn yhat_candidates(
    rho: &ComplexRiskStatistic,
    image: &ComponentVector,
    spec: &DualSearchSpec,
    include_analytic: bool,
) -> Vec<ComponentVector> {
    let d = rho.d();
    let mut out = Vec::new();
    if include_analytic {
        if let Some(y) = analytic_yhat(rho.simple(), image) {
            out.push(y);
        }
    }
    match rho.simple().family() {
        SimpleFamily::WeightedSum { .. } | SimpleFamily::CappedWeightedSum { .. } => {
            // The conjugate domain is a point (or a cone off the grid);
            // the analytic candidate already covers it.
        }
        SimpleFamily::Max | SimpleFamily::LogSumExp { .. } => {
            // Exact-sum simplex grids, dimension-capped: beyond d = 3 only
            // the vertices are enumerated.
            if d == 1 {
                out.push(ComponentVector::new(vec![1.0]).expect("finite"));
            } else if d == 2 {
                for a in grid_values(spec.ystep, 1.0_f64.min(spec.ymax)) {
                    if let Some(p) = sample::snap_to_simplex(vec![a, 1.0 - a]) {
                        out.push(ComponentVector::new(p).expect("finite"));
                    }
                }
            } else if d == 3 {
                for a in grid_values(spec.ystep, 1.0_f64.min(spec.ymax)) {
                    for b in grid_values(spec.ystep, (1.0 - a).max(0.0)) {
                        if let Some(p) = sample::snap_to_simplex(vec![a, b, 1.0 - a - b]) {
                            out.push(ComponentVector::new(p).expect("finite"));
                        }
                    }
                }
            } else {
                for i in 0..d {
                    let mut vertex = vec![0.0; d];
                    vertex[i] = 1.0;
                    out.push(ComponentVector::new(vertex).expect("finite"));
                }
            }
        }
    }
    out
}

/// Result of a dual-representation evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualReport {
    /// Best objective `<Xhat, X> - alpha` over the candidates (`-inf` when
    /// no candidate has finite penalty).
    #[serde(with = "ext_real")]
    pub value: f64,
    pub argmax: Option<DualPair>,
    /// Penalty at the argmax.
    pub alpha: Option<PenaltyValue>,
    pub candidates: usize,
    pub finite_candidates: usize,
    /// True when no candidate had a finite penalty.
    pub empty: bool,
}

fn dual_evaluate_with(
    rho: &ComplexRiskStatistic,
    x: &ScenarioVector,
    spec: &DualSearchSpec,
    include_analytic: bool,
) -> Result<DualReport, ComposeError> {
    spec.validate()?;
    let image = rho.clustering().eval(x).map_err(ComposeError::Catalog)?;
    let sums = x.block_sums();
    let yhats = yhat_candidates(rho, &image, spec, include_analytic);
    let candidates = yhats.len();

    let mut finite_candidates = 0usize;
    let mut best: Option<(f64, DualPair, PenaltyValue)> = None;
    for yhat in yhats {
        let shat = matching_block_sums(rho, &yhat, x)?;
        let pair = DualPair::new(yhat, shat).map_err(ComposeError::Shape)?;
        let alpha = penalty_alpha(rho, &pair)?;
        if !alpha.is_finite() {
            continue;
        }
        finite_candidates += 1;
        let objective = pair.xhat_block_sums.dot(&sums).map_err(ComposeError::Shape)? - alpha.value;
        let better = match &best {
            None => true,
            Some((value, incumbent, _)) => {
                objective > *value || (objective == *value && pair.lex_less(incumbent))
            }
        };
        if better {
            best = Some((objective, pair, alpha));
        }
    }

    Ok(match best {
        Some((value, pair, alpha)) => DualReport {
            value,
            argmax: Some(pair),
            alpha: Some(alpha),
            candidates,
            finite_candidates,
            empty: false,
        },
        None => DualReport {
            value: f64::NEG_INFINITY,
            argmax: None,
            alpha: None,
            candidates,
            finite_candidates: 0,
            empty: true,
        },
    })
}

/// Evaluates the dual representation: the best lower bound
/// `<Xhat, X> - alpha(yhat, Shat)` over the analytic candidate and the
/// configured `yhat` grid, each paired with its matching block sums.
/// Ties break to the lexicographically smallest `(yhat, Shat)`.
pub fn dual_evaluate(
    rho: &ComplexRiskStatistic,
    x: &ScenarioVector,
    spec: &DualSearchSpec,
) -> Result<DualReport, ComposeError> {
    dual_evaluate_with(rho, x, spec, true)
}

/// Grid-only dual evaluation (no analytic candidate); used to study
/// convergence under grid refinement.
pub fn dual_evaluate_grid_only(
    rho: &ComplexRiskStatistic,
    x: &ScenarioVector,
    spec: &DualSearchSpec,
) -> Result<DualReport, ComposeError> {
    dual_evaluate_with(rho, x, spec, false)
}

/// Samples dual pairs and asserts that every finite-penalty pair is a
/// lower bound for `rho(x)`; infinite-penalty draws are skipped and
/// counted.
pub fn weak_duality_check(
    rho: &ComplexRiskStatistic,
    x: &ScenarioVector,
    trials: u64,
    seed: u64,
    tolerance: f64,
) -> Result<AxiomReport, ComposeError> {
    let d = rho.d();
    let image = rho.clustering().eval(x).map_err(ComposeError::Catalog)?;
    let sums = x.block_sums();
    let value = rho.eval(x)?;
    let mut builder = ReportBuilder::new(CheckId::WeakDuality, seed, tolerance);
    for trial in 0..trials {
        let mut rng = sample::trial_rng(seed, trial);
        let mode = trial % 4;
        let yhat = match mode {
            // feasible-by-construction draws
            0 | 1 => match rho.simple().family() {
                SimpleFamily::WeightedSum { weights }
                | SimpleFamily::CappedWeightedSum { weights, .. } => {
                    ComponentVector::new(weights.clone()).expect("finite")
                }
                SimpleFamily::Max | SimpleFamily::LogSumExp { .. } => {
                    if mode == 0 {
                        ComponentVector::new(sample::simplex_point(&mut rng, d)).expect("finite")
                    } else {
                        analytic_yhat(rho.simple(), &image)
                            .unwrap_or_else(|| ComponentVector::zeros(d))
                    }
                }
            },
            // unconstrained nonnegative draws (usually infinite penalty)
            _ => sample::nonneg_component_vector(&mut rng, d),
        };
        let shat = if mode == 3 {
            sample::component_vector(&mut rng, d)
        } else {
            matching_block_sums(rho, &yhat, x)?
        };
        let pair = DualPair::new(yhat, shat).map_err(ComposeError::Shape)?;
        let alpha = penalty_alpha(rho, &pair)?;
        if !alpha.is_finite() {
            builder.skip();
            continue;
        }
        let objective = pair.xhat_block_sums.dot(&sums).map_err(ComposeError::Shape)? - alpha.value;
        let margin = if value == f64::INFINITY {
            f64::NEG_INFINITY
        } else {
            objective - value
        };
        builder.record(margin);
    }
    Ok(builder.finish())
}

/// The primal-minus-dual gap at one input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    /// `max(primal - dual, 0)`.
    #[serde(with = "ext_real")]
    pub gap: f64,
    /// The unclamped difference (tiny negatives are rounding noise).
    #[serde(with = "ext_real")]
    pub raw: f64,
    #[serde(with = "ext_real")]
    pub primal: f64,
    #[serde(with = "ext_real")]
    pub dual: f64,
}

/// Primal value minus dual value, clamped at zero with the raw difference
/// recorded.
pub fn duality_gap(
    rho: &ComplexRiskStatistic,
    x: &ScenarioVector,
    spec: &DualSearchSpec,
) -> Result<GapReport, ComposeError> {
    let primal = rho.eval(x)?;
    let dual = dual_evaluate(rho, x, spec)?.value;
    let raw = primal - dual;
    Ok(GapReport {
        gap: raw.max(0.0),
        raw,
        primal,
        dual,
    })
}

/// Support function of the simple acceptance set at `(c_hat, x_hat)`,
/// weighted-sum family only: finite (zero) exactly on the ray
/// `{(c_hat, -c_hat * w) : c_hat <= 0}`.
pub fn indicator_support_simple(r: &SimpleRiskStatistic, c_hat: f64, x_hat: &ComponentVector) -> f64 {
    let SimpleFamily::WeightedSum { weights } = r.family() else {
        return f64::INFINITY;
    };
    if x_hat.len() != weights.len() || c_hat > 0.0 {
        return f64::INFINITY;
    }
    let on_ray = x_hat
        .values()
        .iter()
        .zip(weights)
        .all(|(xi, wi)| *xi == -c_hat * wi);
    if on_ray {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Numeric biconjugate of the simple acceptance set's indicator at
/// `(c, x)`, weighted-sum family: the supremum of `c_hat * c + <x_hat, x>`
/// over the finite ray of the support function, scanned geometrically down
/// to `c_hat = -10^8`. Members score `0`; points a fixed distance outside
/// the set blow past any finite threshold.
pub fn indicator_biconjugate_simple(
    r: &SimpleRiskStatistic,
    c: f64,
    x: &ComponentVector,
) -> Result<f64, ComposeError> {
    let SimpleFamily::WeightedSum { .. } = r.family() else {
        return Err(ComposeError::Catalog(
            crate::catalog::CatalogError::DimensionMismatch {
                expected: r.d(),
                got: x.len(),
            },
        ));
    };
    let value = r.eval(x).map_err(ComposeError::Catalog)?;
    let slack = c - value;
    let mut best = f64::NEG_INFINITY;
    let mut c_hat = 0.0;
    let mut magnitude = 1e-3;
    loop {
        // objective at (c_hat, -c_hat * w) is c_hat * slack
        best = best.max(c_hat * slack);
        if magnitude > 1e8 {
            break;
        }
        c_hat = -magnitude;
        magnitude *= 10.0;
    }
    Ok(best)
}

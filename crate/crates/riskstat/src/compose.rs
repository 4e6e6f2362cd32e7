//! Composition and decomposition of complex risk statistics.
//!
//! A complex risk statistic is the composition `rho = simple ∘ clustering`:
//! the clustering map compresses the scenario space to one value per
//! component, the simple statistic turns that vector into a risk number.
//! This module also runs the construction in reverse: from a composed
//! `rho` it rebuilds a clustering map (component `i` is `rho` of the
//! block-`i` embedding) and a simple statistic (evaluate `rho` on a
//! constant-block preimage found by bisection along embedded rays).
//!
//! Decomposition is only defined where those embedded rays
//! `t -> rho((t, .., t) embedded in block i)` are strictly monotone; the
//! `max` family with `d >= 2` is flat on half of every ray and reports
//! [`DecomposeError::SectionUnavailable`] instead of guessing a preimage.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{CatalogError, ClusteringFunction, SimpleRiskStatistic};
use crate::report::{AxiomReport, CheckId, ReportBuilder};
use crate::sample;
use crate::scenario::{ComponentVector, ScenarioSpace, ScenarioVector, ShapeError};

/// Composition or evaluation failure.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ComposeError {
    #[error("simple statistic has dimension {simple_d}, clustering produces {clustering_d}")]
    DimensionMismatch {
        simple_d: usize,
        clustering_d: usize,
    },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

/// Decomposition (section) failure.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecomposeError {
    #[error("section unavailable: embedded ray of component {component} is not strictly monotone")]
    SectionUnavailable { component: usize },
    #[error("component {component}: target {target} not in the image of the embedded ray")]
    NotInImage { component: usize, target: f64 },
    #[error("component {component}: target is not finite")]
    InfiniteTarget { component: usize },
    #[error(transparent)]
    Eval(#[from] ComposeError),
}

/// How a [`ComplexRiskStatistic`] came to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Composed,
    Reconstructed,
}

/// Bisection parameters for ray sections, fixed for reproducibility of
/// witnesses and surfaced in the CLI configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionConfig {
    /// Accept `t` once `|ray(t) - target| <= value_tol`.
    pub value_tol: f64,
    /// Bracket endpoints double from `[-1, 1]` up to `2^bracket_cap_exp`.
    pub bracket_cap_exp: u32,
    /// Hard iteration cap after bracketing.
    pub max_iters: u32,
}

impl Default for BisectionConfig {
    fn default() -> Self {
        Self {
            value_tol: 1e-10,
            bracket_cap_exp: 60,
            max_iters: 240,
        }
    }
}

/// A complex risk statistic `rho = simple ∘ clustering`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexRiskStatistic {
    simple: SimpleRiskStatistic,
    clustering: ClusteringFunction,
    provenance: Provenance,
}

impl ComplexRiskStatistic {
    /// Composes a simple statistic with a clustering function.
    pub fn compose(
        simple: SimpleRiskStatistic,
        clustering: ClusteringFunction,
    ) -> Result<Self, ComposeError> {
        if simple.d() != clustering.d() {
            return Err(ComposeError::DimensionMismatch {
                simple_d: simple.d(),
                clustering_d: clustering.d(),
            });
        }
        Ok(Self {
            simple,
            clustering,
            provenance: Provenance::Composed,
        })
    }

    pub fn simple(&self) -> &SimpleRiskStatistic {
        &self.simple
    }

    pub fn clustering(&self) -> &ClusteringFunction {
        &self.clustering
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn space(&self) -> &ScenarioSpace {
        self.clustering.space()
    }

    pub fn d(&self) -> usize {
        self.clustering.d()
    }

    /// Evaluates `rho(X) = simple(clustering(X))`; may be `+inf`.
    pub fn eval(&self, x: &ScenarioVector) -> Result<f64, ComposeError> {
        let mid = self.clustering.eval(x)?;
        Ok(self.simple.eval(&mid)?)
    }

    /// `rho` of the block-`i` embedding of a constant block `t * ones`.
    ///
    /// All other components of the clustering output are exactly zero
    /// (`h(0) = 0`), so this reduces to the simple statistic evaluated on
    /// one embedded coordinate.
    pub fn embedded_ray(&self, i: usize, t: f64) -> f64 {
        let v = self.clustering.component_of_block_sum(i, t * self.space().block_len(i) as f64);
        self.simple.eval_embedded(i, v)
    }

    /// Whether the embedded ray of component `i` is strictly monotone
    /// (decreasing), i.e. whether sections along it are well defined.
    pub fn ray_strictly_monotone(&self, i: usize) -> bool {
        self.simple.embedded_strictly_monotone(i)
    }

    /// Solves `embedded_ray(i, t) = target` by bisection with a doubling
    /// bracket from `[-1, 1]`.
    pub fn solve_embedded_ray(
        &self,
        i: usize,
        target: f64,
        cfg: &BisectionConfig,
    ) -> Result<f64, DecomposeError> {
        if !self.ray_strictly_monotone(i) {
            return Err(DecomposeError::SectionUnavailable { component: i });
        }
        if !target.is_finite() {
            return Err(DecomposeError::InfiniteTarget { component: i });
        }
        let ray = |t: f64| self.embedded_ray(i, t);
        let cap = (2.0f64).powi(cfg.bracket_cap_exp as i32);

        // The ray is decreasing: grow the bracket until ray(lo) >= target >= ray(hi).
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        while ray(lo) < target {
            lo *= 2.0;
            if lo.abs() > cap {
                return Err(DecomposeError::NotInImage {
                    component: i,
                    target,
                });
            }
        }
        while ray(hi) > target {
            hi *= 2.0;
            if hi.abs() > cap {
                return Err(DecomposeError::NotInImage {
                    component: i,
                    target,
                });
            }
        }

        let mut best = 0.5 * (lo + hi);
        for _ in 0..cfg.max_iters {
            best = 0.5 * (lo + hi);
            let value = ray(best);
            if value.is_finite() && (value - target).abs() <= cfg.value_tol {
                return Ok(best);
            }
            if value >= target {
                lo = best;
            } else {
                hi = best;
            }
        }
        let value = ray(best);
        if value.is_finite() && (value - target).abs() <= cfg.value_tol {
            Ok(best)
        } else {
            Err(DecomposeError::NotInImage {
                component: i,
                target,
            })
        }
    }

    /// The reconstructed clustering map `X -> (rho(X embedded in block i))_i`.
    pub fn reconstruct_clustering(&self) -> ReconstructedClustering<'_> {
        ReconstructedClustering { rho: self }
    }

    /// The reconstructed simple statistic at `x`: finds a constant-block
    /// preimage of `x` under the reconstructed clustering map (one ray
    /// section per component) and evaluates `rho` there.
    pub fn reconstruct_simple(
        &self,
        x: &ComponentVector,
        cfg: &BisectionConfig,
    ) -> Result<f64, DecomposeError> {
        let preimage = self.constant_block_preimage(x, cfg)?;
        Ok(self.eval(&preimage)?)
    }

    /// The constant-block vector `Z` with `rho(Z embedded in block i) = x_i`
    /// for every `i`.
    pub fn constant_block_preimage(
        &self,
        x: &ComponentVector,
        cfg: &BisectionConfig,
    ) -> Result<ScenarioVector, DecomposeError> {
        if x.len() != self.d() {
            return Err(ComposeError::Catalog(CatalogError::DimensionMismatch {
                expected: self.d(),
                got: x.len(),
            })
            .into());
        }
        let mut t = Vec::with_capacity(self.d());
        for (i, &target) in x.values().iter().enumerate() {
            t.push(self.solve_embedded_ray(i, target, cfg)?);
        }
        Ok(ScenarioVector::constant_blocks(self.space().clone(), &t)
            .map_err(ComposeError::Shape)?)
    }

    /// Builds the conditional-convexity witness `Z`: a constant-block vector
    /// whose embedded risks hit `lambda * rho(X_[i]) + (1 - lambda) * rho(Y_[i])`
    /// for every `i`.
    pub fn construct_c3_witness(
        &self,
        x: &ScenarioVector,
        y: &ScenarioVector,
        lambda: f64,
        cfg: &BisectionConfig,
    ) -> Result<ScenarioVector, DecomposeError> {
        let mut targets = Vec::with_capacity(self.d());
        for i in 0..self.d() {
            let rx = self.eval(&x.block_embed(i).map_err(ComposeError::Shape)?)?;
            let ry = self.eval(&y.block_embed(i).map_err(ComposeError::Shape)?)?;
            let target = lambda * rx + (1.0 - lambda) * ry;
            if !target.is_finite() {
                return Err(DecomposeError::InfiniteTarget { component: i });
            }
            targets.push(target);
        }
        self.constant_block_preimage(
            &ComponentVector::new(targets).map_err(ComposeError::Shape)?,
            cfg,
        )
    }

    /// Checks that `rho` is constant on level sets of the block sums:
    /// within-block redistributions must not move the value.
    pub fn check_level_set_constancy(
        &self,
        trials: u64,
        seed: u64,
        tolerance: f64,
    ) -> Result<AxiomReport, ComposeError> {
        let mut builder = ReportBuilder::new(CheckId::LevelSets, seed, tolerance);
        for trial in 0..trials {
            let mut rng = sample::trial_rng(seed, trial);
            let x = sample::scenario_vector(&mut rng, self.space());
            let redistributed = sample::redistribute_within_blocks(&mut rng, &x);
            let a = self.eval(&x)?;
            let b = self.eval(&redistributed)?;
            if a.is_finite() && b.is_finite() {
                builder.record((a - b).abs());
            } else if a.is_finite() != b.is_finite() {
                builder.record(f64::INFINITY);
            } else {
                builder.record(0.0);
            }
        }
        Ok(builder.finish())
    }
}

/// The clustering map rebuilt from a complex risk statistic.
#[derive(Debug, Clone, Copy)]
pub struct ReconstructedClustering<'a> {
    rho: &'a ComplexRiskStatistic,
}

impl ReconstructedClustering<'_> {
    /// Component `i` is `rho` of the block-`i` embedding of `x`.
    pub fn eval(&self, x: &ScenarioVector) -> Result<ComponentVector, ComposeError> {
        let mut values = Vec::with_capacity(self.rho.d());
        for i in 0..self.rho.d() {
            values.push(self.rho.eval(&x.block_embed(i)?)?);
        }
        Ok(ComponentVector::new(values)?)
    }
}

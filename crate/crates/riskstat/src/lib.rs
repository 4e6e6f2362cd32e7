//! Scenario-based convex risk statistics on product sample spaces.
//!
//! The crate models systems whose risk is observed through per-component
//! scenario samples. A *clustering function* compresses the product space
//! `R^{k_1} x .. x R^{k_d}` to one value per component; a *simple risk
//! statistic* turns that vector into a risk number; their composition is a
//! *complex risk statistic*. Alongside evaluation the crate provides:
//!
//! - decomposition of a composed statistic back into its two stages,
//! - seeded property suites for the defining axioms of all three layers,
//! - acceptance sets with a two-route primal evaluator,
//! - a Fenchel-dual representation with penalty diagnostics and
//!   duality-gap measurement.
//!
//! Everything is deterministic under a fixed seed; all values are immutable
//! after construction and safe to share across threads.

pub mod acceptance;
pub mod axioms;
pub mod catalog;
pub mod compose;
pub mod duality;
pub mod report;
pub mod sample;
pub mod scenario;

pub use acceptance::{
    accepts_clustering, accepts_simple, check_set_convexity, check_set_monotonicity,
    primal_evaluate, AcceptanceSet, Direction, PrimalGridSpec, PrimalReport,
};
pub use axioms::{check_axiom, AxiomError, Subject};
pub use catalog::{
    core_clustering_families, core_simple_families, CatalogError, ClusteringFunction, LinkFamily,
    SimpleFamily, SimpleRiskStatistic,
};
pub use compose::{
    BisectionConfig, ComplexRiskStatistic, ComposeError, DecomposeError, Provenance,
    ReconstructedClustering,
};
pub use duality::{
    dual_evaluate, dual_evaluate_grid_only, duality_gap, matching_block_sums, penalty_alpha,
    penalty_alpha_grid, weak_duality_check, ConjugateMethod, DualPair, DualReport, DualSearchSpec,
    GapReport, PenaltyValue,
};
pub use report::{AxiomReport, CheckId};
pub use scenario::{ComponentVector, ScenarioSpace, ScenarioVector, ShapeError};

/// Library version, echoed into reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

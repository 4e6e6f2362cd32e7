//! Browser bindings for the demo page.
//!
//! Three pure operations, JSON/typed-array in and out so the page needs no
//! framework: evaluate one scenario with full primal/dual diagnostics,
//! rasterize the risk surface over a two-scenario slice, and trace the
//! duality gap as the dual grid refines. All logic lives in plain
//! functions so the crate also compiles and tests on the host.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use riskstat::{
    dual_evaluate, dual_evaluate_grid_only, duality_gap, primal_evaluate, ClusteringFunction,
    ComplexRiskStatistic, DualSearchSpec, LinkFamily, PrimalGridSpec, ScenarioSpace,
    ScenarioVector, SimpleFamily, SimpleRiskStatistic,
};

#[derive(Deserialize)]
struct DemoConfig {
    k: Vec<usize>,
    simple: SimpleFamily,
    clustering: ClusteringSpec,
}

#[derive(Deserialize)]
struct ClusteringSpec {
    family: LinkFamily,
    gamma: Vec<f64>,
}

fn build(config_json: &str) -> Result<ComplexRiskStatistic, String> {
    let config: DemoConfig = serde_json::from_str(config_json).map_err(|e| e.to_string())?;
    let space = ScenarioSpace::new(config.k).map_err(|e| e.to_string())?;
    let simple = match config.simple {
        SimpleFamily::WeightedSum { weights } => SimpleRiskStatistic::weighted_sum(weights),
        SimpleFamily::Max => SimpleRiskStatistic::max(space.d()),
        SimpleFamily::LogSumExp { temperature } => {
            SimpleRiskStatistic::log_sum_exp(space.d(), temperature)
        }
        SimpleFamily::CappedWeightedSum { weights, caps } => {
            SimpleRiskStatistic::capped_weighted_sum(weights, caps)
        }
    }
    .map_err(|e| e.to_string())?;
    let clustering = ClusteringFunction::new(
        space,
        config.clustering.family,
        config.clustering.gamma,
    )
    .map_err(|e| e.to_string())?;
    ComplexRiskStatistic::compose(simple, clustering).map_err(|e| e.to_string())
}

fn parse_scenario(rho: &ComplexRiskStatistic, flat_json: &str) -> Result<ScenarioVector, String> {
    let flat: Vec<f64> = serde_json::from_str(flat_json).map_err(|e| e.to_string())?;
    ScenarioVector::from_flat(rho.space().clone(), &flat).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Evaluation {
    rho: f64,
    clustering_image: Vec<f64>,
    primal_analytic: f64,
    primal_numeric: f64,
    dual_value: f64,
    dual_yhat: Option<Vec<f64>>,
    dual_block_sums: Option<Vec<f64>>,
    alpha: Option<f64>,
    gap: f64,
}

fn evaluate_impl(config_json: &str, flat_json: &str) -> Result<String, String> {
    let rho = build(config_json)?;
    let x = parse_scenario(&rho, flat_json)?;
    let primal = primal_evaluate(&rho, &x, PrimalGridSpec::default()).map_err(|e| e.to_string())?;
    let spec = DualSearchSpec::default();
    let dual = dual_evaluate(&rho, &x, &spec).map_err(|e| e.to_string())?;
    let gap = duality_gap(&rho, &x, &spec).map_err(|e| e.to_string())?;
    let image = rho.clustering().eval(&x).map_err(|e| e.to_string())?;
    let out = Evaluation {
        rho: rho.eval(&x).map_err(|e| e.to_string())?,
        clustering_image: image.values().to_vec(),
        primal_analytic: primal.analytic,
        primal_numeric: primal.numeric,
        dual_value: dual.value,
        dual_yhat: dual.argmax.as_ref().map(|p| p.yhat.values().to_vec()),
        dual_block_sums: dual
            .argmax
            .as_ref()
            .map(|p| p.xhat_block_sums.values().to_vec()),
        alpha: dual.alpha.as_ref().map(|a| a.value),
        gap: gap.gap,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

fn risk_surface_impl(
    config_json: &str,
    lo: f64,
    hi: f64,
    resolution: usize,
) -> Result<Vec<f64>, String> {
    let rho = build(config_json)?;
    if rho.space().total_len() != 2 {
        return Err(format!(
            "surface view needs a 2-scenario space, got total dimension {}",
            rho.space().total_len()
        ));
    }
    if !(2..=1024).contains(&resolution) {
        return Err("resolution must be in 2..=1024".into());
    }
    let n = resolution;
    let step = (hi - lo) / (n - 1) as f64;
    let mut out = Vec::with_capacity(n * n);
    // row-major: row = second coordinate (rendered top-down by the page)
    for row in 0..n {
        let x1 = lo + row as f64 * step;
        for col in 0..n {
            let x0 = lo + col as f64 * step;
            let x = ScenarioVector::from_flat(rho.space().clone(), &[x0, x1])
                .map_err(|e| e.to_string())?;
            out.push(rho.eval(&x).map_err(|e| e.to_string())?);
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct GapPoint {
    step: f64,
    dual: f64,
    gap: f64,
}

fn gap_curve_impl(config_json: &str, flat_json: &str, steps_json: &str) -> Result<String, String> {
    let rho = build(config_json)?;
    let x = parse_scenario(&rho, flat_json)?;
    let steps: Vec<f64> = serde_json::from_str(steps_json).map_err(|e| e.to_string())?;
    let primal = rho.eval(&x).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(steps.len());
    for step in steps {
        if step.is_nan() || step <= 0.0 {
            return Err(format!("grid step {step} must be > 0"));
        }
        let spec = DualSearchSpec {
            ystep: step,
            ..DualSearchSpec::default()
        };
        let dual = dual_evaluate_grid_only(&rho, &x, &spec).map_err(|e| e.to_string())?;
        out.push(GapPoint {
            step,
            dual: dual.value,
            gap: (primal - dual.value).max(0.0),
        });
    }
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Evaluate one scenario: risk value, clustering image, two-route primal,
/// best dual pair, and the gap. Scenario is the flat entry list.
#[wasm_bindgen]
pub fn evaluate(config_json: &str, scenario_json: &str) -> Result<String, JsError> {
    evaluate_impl(config_json, scenario_json).map_err(|e| JsError::new(&e))
}

/// Risk values on a `resolution x resolution` grid over `[lo, hi]^2` of a
/// two-scenario space, row-major.
#[wasm_bindgen]
pub fn risk_surface(
    config_json: &str,
    lo: f64,
    hi: f64,
    resolution: usize,
) -> Result<Vec<f64>, JsError> {
    risk_surface_impl(config_json, lo, hi, resolution).map_err(|e| JsError::new(&e))
}

/// Duality gap of the grid-only dual search at each requested grid step.
#[wasm_bindgen]
pub fn gap_curve(
    config_json: &str,
    scenario_json: &str,
    steps_json: &str,
) -> Result<String, JsError> {
    gap_curve_impl(config_json, scenario_json, steps_json).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = r#"{
        "k": [1, 1],
        "simple": {"family": "max"},
        "clustering": {"family": "neg-average", "gamma": [1.0, 1.0]}
    }"#;

    #[test]
    fn evaluate_round_trips_json() {
        let out = evaluate_impl(CONFIG, "[1.0, 3.0]").unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(parsed["rho"], serde_json::json!(-1.0));
        assert!(parsed["gap"].as_f64().unwrap() <= 1e-9);
    }

    #[test]
    fn surface_has_expected_extremes() {
        let surface = risk_surface_impl(CONFIG, -5.0, 5.0, 11).unwrap();
        assert_eq!(surface.len(), 121);
        // max(-x0, -x1) is largest at the bottom-left corner (x0 = x1 = -5)
        let best = surface.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best, 5.0);
        assert_eq!(surface[0], 5.0);
    }

    #[test]
    fn gap_curve_is_monotone_under_refinement() {
        let config = r#"{
            "k": [1, 1],
            "simple": {"family": "log-sum-exp", "temperature": 1.0},
            "clustering": {"family": "neg-average", "gamma": [1.0, 1.0]}
        }"#;
        let out = gap_curve_impl(config, "[0.4, -1.3]", "[0.04, 0.02, 0.01]").unwrap();
        let points: Vec<serde_json::Value> = serde_json::from_str(&out).unwrap();
        let gaps: Vec<f64> = points.iter().map(|p| p["gap"].as_f64().unwrap()).collect();
        assert!(gaps[0] + 1e-12 >= gaps[1]);
        assert!(gaps[1] + 1e-12 >= gaps[2]);
        assert!(gaps[2] <= 1e-2);
    }

    #[test]
    fn bad_config_is_reported() {
        let err = evaluate_impl("{\"k\": []}", "[0.0]").unwrap_err();
        assert!(!err.is_empty());
        let err = risk_surface_impl(
            r#"{"k": [2, 1], "simple": {"family": "max"},
                "clustering": {"family": "neg-average", "gamma": [1.0, 1.0]}}"#,
            -5.0,
            5.0,
            64,
        )
        .unwrap_err();
        assert!(err.contains("2-scenario"));
    }
}

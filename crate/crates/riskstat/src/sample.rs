//! Deterministic seeded sampling for the verification suites.
//!
//! Every trial derives its own generator from `(seed, trial index)`, so
//! suites can be fanned out across workers and still merge to identical
//! reports.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scenario::{ComponentVector, ScenarioSpace, ScenarioVector};

/// Test inputs are drawn uniformly from `[-RANGE, RANGE]` per entry.
pub const ENTRY_RANGE: f64 = 5.0;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Generator for trial `index` of a suite seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(index)))
}

/// One uniform draw in `[lo, hi]`.
pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..=hi)
}

/// A scenario vector with entries uniform in `[-ENTRY_RANGE, ENTRY_RANGE]`.
pub fn scenario_vector(rng: &mut ChaCha8Rng, space: &ScenarioSpace) -> ScenarioVector {
    let blocks = space
        .block_lens()
        .iter()
        .map(|&k| (0..k).map(|_| uniform(rng, -ENTRY_RANGE, ENTRY_RANGE)).collect())
        .collect();
    ScenarioVector::new(space.clone(), blocks).expect("sampled entries are finite")
}

/// A scenario vector with nonnegative entries in `[0, ENTRY_RANGE]`.
pub fn nonneg_scenario_vector(rng: &mut ChaCha8Rng, space: &ScenarioSpace) -> ScenarioVector {
    let blocks = space
        .block_lens()
        .iter()
        .map(|&k| (0..k).map(|_| uniform(rng, 0.0, ENTRY_RANGE)).collect())
        .collect();
    ScenarioVector::new(space.clone(), blocks).expect("sampled entries are finite")
}

/// A component vector with entries uniform in `[-ENTRY_RANGE, ENTRY_RANGE]`.
pub fn component_vector(rng: &mut ChaCha8Rng, d: usize) -> ComponentVector {
    ComponentVector::new((0..d).map(|_| uniform(rng, -ENTRY_RANGE, ENTRY_RANGE)).collect())
        .expect("sampled entries are finite")
}

/// A component vector with nonnegative entries in `[0, ENTRY_RANGE]`.
pub fn nonneg_component_vector(rng: &mut ChaCha8Rng, d: usize) -> ComponentVector {
    ComponentVector::new((0..d).map(|_| uniform(rng, 0.0, ENTRY_RANGE)).collect())
        .expect("sampled entries are finite")
}

/// A convex-combination weight uniform in `[0, 1]`.
pub fn lambda(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(0.0..=1.0)
}

/// Redistributes mass within each block of `x` without changing any block
/// sum (up to rounding): random pairwise transfers plus a rotation.
pub fn redistribute_within_blocks(rng: &mut ChaCha8Rng, x: &ScenarioVector) -> ScenarioVector {
    let blocks = x
        .blocks()
        .iter()
        .map(|block| {
            let mut b = block.clone();
            let k = b.len();
            if k >= 2 {
                b.rotate_left(rng.random_range(0..k));
                for _ in 0..k {
                    let i = rng.random_range(0..k);
                    let j = rng.random_range(0..k);
                    if i != j {
                        let delta = uniform(rng, -1.0, 1.0);
                        b[i] += delta;
                        b[j] -= delta;
                    }
                }
            }
            b
        })
        .collect();
    ScenarioVector::new(x.space().clone(), blocks).expect("transfers keep entries finite")
}

/// Adjusts the largest coordinate so the vector sums to exactly `1.0`,
/// returning `None` when the adjustment cannot make an exact nonnegative
/// simplex point. Conjugate domains use exact comparisons, so candidate
/// generators must land on the simplex bit-exactly.
pub fn snap_to_simplex(mut y: Vec<f64>) -> Option<Vec<f64>> {
    if y.is_empty() || y.iter().any(|&v| !v.is_finite() || v < 0.0) {
        return None;
    }
    let argmax = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite"))
        .map(|(i, _)| i)
        .expect("non-empty");
    for _ in 0..8 {
        let total: f64 = y.iter().sum();
        if total == 1.0 {
            return Some(y);
        }
        let fixed = y[argmax] + (1.0 - total);
        if fixed.is_nan() || fixed < 0.0 {
            return None;
        }
        y[argmax] = fixed;
    }
    let total: f64 = y.iter().sum();
    (total == 1.0).then_some(y)
}

/// A random probability vector that sums to exactly `1.0`, built from
/// dyadic coordinates so the snap never drifts.
pub fn simplex_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    const DENOM: u64 = 1 << 20;
    let mut raw: Vec<f64> = (0..d)
        .map(|_| rng.random_range(0..=DENOM) as f64 / DENOM as f64)
        .collect();
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        raw[0] = 1.0;
        return raw;
    }
    for v in &mut raw {
        *v /= total;
    }
    snap_to_simplex(raw.clone()).unwrap_or_else(|| {
        let mut fallback = vec![0.0; d];
        fallback[0] = 1.0;
        fallback
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trial_rng_is_deterministic_and_distinct() {
        let a: Vec<f64> = {
            let mut r = trial_rng(42, 3);
            (0..4).map(|_| uniform(&mut r, -1.0, 1.0)).collect()
        };
        let b: Vec<f64> = {
            let mut r = trial_rng(42, 3);
            (0..4).map(|_| uniform(&mut r, -1.0, 1.0)).collect()
        };
        assert_eq!(a, b);
        let c: Vec<f64> = {
            let mut r = trial_rng(42, 4);
            (0..4).map(|_| uniform(&mut r, -1.0, 1.0)).collect()
        };
        assert_ne!(a, c);
    }

    #[test]
    fn redistribution_preserves_block_sums() {
        let space = ScenarioSpace::new(vec![3, 1, 4]).unwrap();
        let mut rng = trial_rng(1, 1);
        let x = scenario_vector(&mut rng, &space);
        let y = redistribute_within_blocks(&mut rng, &x);
        for (a, b) in x.block_sums().values().iter().zip(y.block_sums().values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn simplex_points_sum_to_one_exactly() {
        let mut rng = trial_rng(9, 0);
        for d in 1..=4 {
            for _ in 0..200 {
                let p = simplex_point(&mut rng, d);
                assert_eq!(p.iter().sum::<f64>(), 1.0);
                assert!(p.iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn snap_rejects_negative_mass() {
        assert!(snap_to_simplex(vec![-0.1, 1.1]).is_none());
        assert_eq!(snap_to_simplex(vec![0.25, 0.75]), Some(vec![0.25, 0.75]));
    }
}

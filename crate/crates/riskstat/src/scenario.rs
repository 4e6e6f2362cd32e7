//! Product scenario spaces and blockwise vector arithmetic.
//!
//! A scenario space is the product `R^{k_1} x ... x R^{k_d}`: component `i`
//! of a system contributes `k_i` sample observations. Everything downstream
//! (clustering, composition, duality) sees a [`ScenarioVector`] only through
//! its per-block sums, so this module centralizes block sums, the block-sum
//! preorder, the two inner products, and block embeddings.
//!
//! A note on the order: `X.preorder_geq(&Y)` holds when every block sum of
//! `X` is *less than or equal to* the matching block sum of `Y`. The
//! dominance direction is deliberately inverted relative to the usual loss
//! convention; the composition and duality signs only work with this
//! reading. All order predicates compare floats exactly (no tolerance).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Shape or input validation failure for scenario-space values.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShapeError {
    #[error("scenario space needs at least one component")]
    EmptySpace,
    #[error("component {index} has zero scenarios (every k_i must be >= 1)")]
    EmptyBlock { index: usize },
    #[error("expected {expected} blocks, got {got}")]
    BlockCount { expected: usize, got: usize },
    #[error("block {index} has length {got}, expected {expected}")]
    BlockLen {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("non-finite entry {value} at block {block}, position {position}")]
    NonFiniteEntry {
        block: usize,
        position: usize,
        value: f64,
    },
    #[error("non-finite entry {value} at position {position}")]
    NonFiniteComponent { position: usize, value: f64 },
    #[error("scenario spaces differ: {left:?} vs {right:?}")]
    SpaceMismatch { left: Vec<usize>, right: Vec<usize> },
    #[error("component vectors have lengths {left} and {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("component index {index} out of range for d = {d}")]
    ComponentOutOfRange { index: usize, d: usize },
    #[error("flat data has {got} entries, space needs {expected}")]
    FlatLen { expected: usize, got: usize },
}

/// The shape `(d, [k_1..k_d])` of a product scenario space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScenarioSpace {
    k: Vec<usize>,
}

impl ScenarioSpace {
    /// Builds a space from the per-component scenario counts.
    pub fn new(k: Vec<usize>) -> Result<Self, ShapeError> {
        if k.is_empty() {
            return Err(ShapeError::EmptySpace);
        }
        if let Some(index) = k.iter().position(|&ki| ki == 0) {
            return Err(ShapeError::EmptyBlock { index });
        }
        Ok(Self { k })
    }

    /// Number of components `d`.
    pub fn d(&self) -> usize {
        self.k.len()
    }

    /// Scenario count of component `i` (zero-based).
    pub fn block_len(&self, i: usize) -> usize {
        self.k[i]
    }

    /// Per-component scenario counts.
    pub fn block_lens(&self) -> &[usize] {
        &self.k
    }

    /// Total dimension `sum k_i` of the flattened space.
    pub fn total_len(&self) -> usize {
        self.k.iter().sum()
    }
}

/// One element of the product space, stored blockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioVector {
    space: ScenarioSpace,
    blocks: Vec<Vec<f64>>,
}

impl ScenarioVector {
    /// Builds a vector, checking block lengths and finiteness.
    pub fn new(space: ScenarioSpace, blocks: Vec<Vec<f64>>) -> Result<Self, ShapeError> {
        if blocks.len() != space.d() {
            return Err(ShapeError::BlockCount {
                expected: space.d(),
                got: blocks.len(),
            });
        }
        for (i, block) in blocks.iter().enumerate() {
            if block.len() != space.block_len(i) {
                return Err(ShapeError::BlockLen {
                    index: i,
                    expected: space.block_len(i),
                    got: block.len(),
                });
            }
            for (j, &v) in block.iter().enumerate() {
                if !v.is_finite() {
                    return Err(ShapeError::NonFiniteEntry {
                        block: i,
                        position: j,
                        value: v,
                    });
                }
            }
        }
        Ok(Self { space, blocks })
    }

    /// The all-zero vector of a space.
    pub fn zeros(space: ScenarioSpace) -> Self {
        let blocks = space.block_lens().iter().map(|&ki| vec![0.0; ki]).collect();
        Self { space, blocks }
    }

    /// A vector whose block `i` is constant `t_i`.
    pub fn constant_blocks(space: ScenarioSpace, t: &[f64]) -> Result<Self, ShapeError> {
        if t.len() != space.d() {
            return Err(ShapeError::LengthMismatch {
                left: space.d(),
                right: t.len(),
            });
        }
        let blocks = space
            .block_lens()
            .iter()
            .zip(t)
            .map(|(&ki, &ti)| vec![ti; ki])
            .collect();
        Self::new(space, blocks)
    }

    pub fn space(&self) -> &ScenarioSpace {
        &self.space
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.blocks[i]
    }

    fn check_same_space(&self, other: &Self) -> Result<(), ShapeError> {
        if self.space != other.space {
            return Err(ShapeError::SpaceMismatch {
                left: self.space.k.clone(),
                right: other.space.k.clone(),
            });
        }
        Ok(())
    }

    /// Per-block sums `s_i = sum_j X^i_j`, the canonical statistic every
    /// downstream formula depends on. Each block is summed in value-sorted
    /// order, so within-block permutations produce the bit-identical sum.
    pub fn block_sums(&self) -> ComponentVector {
        let values = self
            .blocks
            .iter()
            .map(|block| {
                let mut ordered = block.clone();
                ordered.sort_by(f64::total_cmp);
                ordered.iter().sum()
            })
            .collect();
        ComponentVector { values }
    }

    /// Block-sum preorder: `self` succeeds `other` when every block sum of
    /// `self` is `<=` the matching block sum of `other`. Exact comparisons.
    pub fn preorder_geq(&self, other: &Self) -> Result<bool, ShapeError> {
        self.check_same_space(other)?;
        let (s, o) = (self.block_sums(), other.block_sums());
        Ok(s.values().iter().zip(o.values()).all(|(a, b)| a <= b))
    }

    /// Block inner product `sum_i s_i(self) * s_i(other)`.
    pub fn inner_block(&self, other: &Self) -> Result<f64, ShapeError> {
        self.check_same_space(other)?;
        self.block_sums().dot(&other.block_sums())
    }

    /// Copy of `self` with every block except block `i` zeroed.
    pub fn block_embed(&self, i: usize) -> Result<Self, ShapeError> {
        if i >= self.space.d() {
            return Err(ShapeError::ComponentOutOfRange {
                index: i,
                d: self.space.d(),
            });
        }
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(l, block)| {
                if l == i {
                    block.clone()
                } else {
                    vec![0.0; block.len()]
                }
            })
            .collect();
        Ok(Self {
            space: self.space.clone(),
            blocks,
        })
    }

    /// Flat serialization order: block 1 left to right, then block 2, etc.
    pub fn to_flat(&self) -> Vec<f64> {
        self.blocks.iter().flatten().copied().collect()
    }

    /// Inverse of [`to_flat`](Self::to_flat) for a given space.
    pub fn from_flat(space: ScenarioSpace, flat: &[f64]) -> Result<Self, ShapeError> {
        if flat.len() != space.total_len() {
            return Err(ShapeError::FlatLen {
                expected: space.total_len(),
                got: flat.len(),
            });
        }
        let mut blocks = Vec::with_capacity(space.d());
        let mut offset = 0;
        for &ki in space.block_lens() {
            blocks.push(flat[offset..offset + ki].to_vec());
            offset += ki;
        }
        Self::new(space, blocks)
    }

    /// Pointwise affine combination `lambda * self + (1 - lambda) * other`.
    pub fn affine_combination(&self, other: &Self, lambda: f64) -> Result<Self, ShapeError> {
        self.check_same_space(other)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(&x, &y)| lambda * x + (1.0 - lambda) * y)
                    .collect()
            })
            .collect();
        Self::new(self.space.clone(), blocks)
    }

    /// Pointwise sum.
    pub fn add(&self, other: &Self) -> Result<Self, ShapeError> {
        self.check_same_space(other)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| x + y).collect())
            .collect();
        Self::new(self.space.clone(), blocks)
    }
}

/// A vector in `R^d`, one value per component of the system.
/// Serializes as a bare array; deserialization re-validates finiteness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ComponentVector {
    values: Vec<f64>,
}

impl TryFrom<Vec<f64>> for ComponentVector {
    type Error = ShapeError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl ComponentVector {
    /// Builds a component vector, rejecting non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self, ShapeError> {
        for (position, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(ShapeError::NonFiniteComponent { position, value: v });
            }
        }
        Ok(Self { values })
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            values: vec![0.0; d],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Standard dot product on `R^d`.
    pub fn dot(&self, other: &Self) -> Result<f64, ShapeError> {
        if self.len() != other.len() {
            return Err(ShapeError::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Componentwise `<=`, exact.
    pub fn leq(&self, other: &Self) -> Result<bool, ShapeError> {
        if self.len() != other.len() {
            return Err(ShapeError::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(self.values.iter().zip(&other.values).all(|(a, b)| a <= b))
    }

    pub fn affine_combination(&self, other: &Self, lambda: f64) -> Result<Self, ShapeError> {
        if self.len() != other.len() {
            return Err(ShapeError::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Self::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| lambda * x + (1.0 - lambda) * y)
                .collect(),
        )
    }
}

impl From<ComponentVector> for Vec<f64> {
    fn from(v: ComponentVector) -> Self {
        v.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(k: &[usize]) -> ScenarioSpace {
        ScenarioSpace::new(k.to_vec()).unwrap()
    }

    fn vector(k: &[usize], blocks: &[&[f64]]) -> ScenarioVector {
        ScenarioVector::new(space(k), blocks.iter().map(|b| b.to_vec()).collect()).unwrap()
    }

    #[test]
    fn block_sums_basic() {
        let x = vector(&[2, 1], &[&[1.0, 2.0], &[5.0]]);
        assert_eq!(x.block_sums().values(), &[3.0, 5.0]);
    }

    #[test]
    fn block_sums_zero_and_cancellation() {
        let z = ScenarioVector::zeros(space(&[3, 2]));
        assert_eq!(z.block_sums().values(), &[0.0, 0.0]);
        let c = vector(&[3], &[&[-1.0, 0.0, 1.0]]);
        assert_eq!(c.block_sums().values(), &[0.0]);
    }

    #[test]
    fn preorder_direction_is_block_sum_leq() {
        let x = vector(&[2, 1], &[&[0.0, 1.0], &[5.0]]);
        let y = vector(&[2, 1], &[&[2.0, 3.0], &[4.0]]);
        // 1 <= 5 holds but 5 <= 4 fails
        assert!(!x.preorder_geq(&y).unwrap());
        assert!(x.preorder_geq(&x).unwrap());
        let a = vector(&[2], &[&[0.0, 0.0]]);
        let b = vector(&[2], &[&[1.0, 0.0]]);
        assert!(a.preorder_geq(&b).unwrap());
    }

    #[test]
    fn inner_block_examples() {
        let x = vector(&[2], &[&[1.0, 2.0]]);
        let y = vector(&[2], &[&[3.0, 4.0]]);
        assert_eq!(x.inner_block(&y).unwrap(), 21.0);

        let zero = ScenarioVector::zeros(space(&[2]));
        assert_eq!(zero.inner_block(&y).unwrap(), 0.0);

        let a = vector(&[1, 1], &[&[2.0], &[-1.0]]);
        let b = vector(&[1, 1], &[&[3.0], &[5.0]]);
        assert_eq!(a.inner_block(&b).unwrap(), 1.0);
    }

    #[test]
    fn inner_component_examples() {
        let x = ComponentVector::new(vec![1.0, 2.0]).unwrap();
        let y = ComponentVector::new(vec![3.0, 4.0]).unwrap();
        assert_eq!(x.dot(&y).unwrap(), 11.0);
        assert_eq!(x.dot(&ComponentVector::zeros(2)).unwrap(), 0.0);
        let u = ComponentVector::new(vec![1.0, -1.0]).unwrap();
        let v = ComponentVector::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(u.dot(&v).unwrap(), 0.0);
    }

    #[test]
    fn block_embed_examples() {
        let x = vector(&[2, 1], &[&[1.0, 3.0], &[2.0]]);
        let e2 = x.block_embed(1).unwrap();
        assert_eq!(e2.blocks(), &[vec![0.0, 0.0], vec![2.0]]);

        let z = ScenarioVector::zeros(space(&[2, 1]));
        assert_eq!(z.block_embed(0).unwrap(), z);

        let single = vector(&[3], &[&[1.0, -2.0, 0.5]]);
        assert_eq!(single.block_embed(0).unwrap(), single);

        assert!(matches!(
            x.block_embed(2),
            Err(ShapeError::ComponentOutOfRange { .. })
        ));
    }

    #[test]
    fn embeddings_sum_back_to_original() {
        let x = vector(&[2, 3], &[&[1.0, -4.0], &[0.5, 2.0, -1.0]]);
        let mut acc = ScenarioVector::zeros(x.space().clone());
        for i in 0..x.space().d() {
            acc = acc.add(&x.block_embed(i).unwrap()).unwrap();
        }
        assert_eq!(acc, x);
    }

    #[test]
    fn flat_round_trip_and_errors() {
        let x = vector(&[2, 1], &[&[1.0, 3.0], &[2.0]]);
        let flat = x.to_flat();
        assert_eq!(flat, vec![1.0, 3.0, 2.0]);
        let back = ScenarioVector::from_flat(x.space().clone(), &flat).unwrap();
        assert_eq!(back, x);
        assert!(matches!(
            ScenarioVector::from_flat(space(&[2, 1]), &[1.0, 2.0]),
            Err(ShapeError::FlatLen {
                expected: 3,
                got: 2
            })
        ));
    }

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(matches!(
            ScenarioSpace::new(vec![]),
            Err(ShapeError::EmptySpace)
        ));
        assert!(matches!(
            ScenarioSpace::new(vec![2, 0]),
            Err(ShapeError::EmptyBlock { index: 1 })
        ));
        assert!(matches!(
            ScenarioVector::new(space(&[2]), vec![vec![1.0, f64::NAN]]),
            Err(ShapeError::NonFiniteEntry { .. })
        ));
        assert!(matches!(
            ScenarioVector::new(space(&[2]), vec![vec![1.0]]),
            Err(ShapeError::BlockLen { .. })
        ));
        let x = vector(&[2], &[&[0.0, 0.0]]);
        let y = vector(&[1, 1], &[&[0.0], &[0.0]]);
        assert!(x.preorder_geq(&y).is_err());
    }
}

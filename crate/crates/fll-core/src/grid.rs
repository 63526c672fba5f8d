//! Level-k grids over a bounding cube and sparse sets of occupied cells.
//!
//! A grid at level k splits the cube `[origin, origin + extent]^p` into
//! `base^k` cells per axis of side `extent · base^{-k}`. Cell indexing is
//! clamped half-open: points on the far face land in the last cell, so every
//! point of the cube maps to exactly one cell.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid base must be at least 2, got {0}")]
    BadBase(u32),
    #[error("grid extent must be positive, got {0}")]
    BadExtent(f64),
    #[error("origin must be non-empty")]
    EmptyOrigin,
    #[error("grid capacity overflow: base^(level*dim) exceeds the cell index space (base {base}, level {level}, dim {dim})")]
    CapacityOverflow { base: u32, level: u32, dim: usize },
    #[error("cell index {index} out of range 0..{cells_per_axis} on axis {axis}")]
    IndexOutOfRange {
        index: u64,
        cells_per_axis: u64,
        axis: usize,
    },
    #[error("cell sets live on different grids")]
    GridMismatch,
}

/// One grid level over a declared bounding cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub base: u32,
    pub level: u32,
    pub origin: Vec<f64>,
    pub extent: f64,
}

impl GridSpec {
    pub fn new(base: u32, level: u32, origin: Vec<f64>, extent: f64) -> Result<Self, GridError> {
        if base < 2 {
            return Err(GridError::BadBase(base));
        }
        if !(extent > 0.0) {
            return Err(GridError::BadExtent(extent));
        }
        if origin.is_empty() {
            return Err(GridError::EmptyOrigin);
        }
        let dim = origin.len();
        // encoded cell keys must fit in u128
        let bits = (base as f64).log2() * level as f64 * dim as f64;
        if bits > 120.0 {
            return Err(GridError::CapacityOverflow { base, level, dim });
        }
        Ok(Self {
            base,
            level,
            origin,
            extent,
        })
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    /// Cells per axis, `base^level`.
    pub fn cells_per_axis(&self) -> u64 {
        (self.base as u64).pow(self.level)
    }

    /// Cell side length δ_k = extent · base^{-level}.
    pub fn cell_side(&self) -> f64 {
        self.extent / self.cells_per_axis() as f64
    }

    /// Clamped half-open cell index of a point, per axis.
    pub fn cell_of(&self, x: &[f64]) -> Vec<u64> {
        let delta = self.cell_side();
        let last = self.cells_per_axis() - 1;
        x.iter()
            .zip(&self.origin)
            .map(|(xi, oi)| {
                let raw = ((xi - oi) / delta).floor();
                if raw < 0.0 {
                    0
                } else {
                    (raw as u64).min(last)
                }
            })
            .collect()
    }

    /// Center point of a cell.
    pub fn cell_center(&self, idx: &[u64]) -> Vec<f64> {
        let delta = self.cell_side();
        idx.iter()
            .zip(&self.origin)
            .map(|(i, oi)| oi + (*i as f64 + 0.5) * delta)
            .collect()
    }

    /// Axis-aligned bounds `[lo, hi]` of a cell.
    pub fn cell_bounds(&self, idx: &[u64]) -> (Vec<f64>, Vec<f64>) {
        let delta = self.cell_side();
        let lo: Vec<f64> = idx
            .iter()
            .zip(&self.origin)
            .map(|(i, oi)| oi + *i as f64 * delta)
            .collect();
        let hi: Vec<f64> = lo.iter().map(|l| l + delta).collect();
        (lo, hi)
    }

    /// The grid one level deeper over the same cube.
    pub fn refined(&self) -> Result<Self, GridError> {
        Self::new(self.base, self.level + 1, self.origin.clone(), self.extent)
    }

    fn encode(&self, idx: &[u64]) -> u128 {
        let stride = self.cells_per_axis() as u128;
        let mut key: u128 = 0;
        for &i in idx.iter().rev() {
            key = key * stride + i as u128;
        }
        key
    }

    fn decode(&self, mut key: u128) -> Vec<u64> {
        let stride = self.cells_per_axis() as u128;
        let mut idx = vec![0u64; self.dim()];
        for v in idx.iter_mut() {
            *v = (key % stride) as u64;
            key /= stride;
        }
        idx
    }
}

/// A range of grid levels over one bounding cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRange {
    pub base: u32,
    pub k_min: u32,
    pub k_max: u32,
    pub origin: Vec<f64>,
    pub extent: f64,
}

impl GridRange {
    pub fn spec_at(&self, k: u32) -> Result<GridSpec, GridError> {
        GridSpec::new(self.base, k, self.origin.clone(), self.extent)
    }

    pub fn levels(&self) -> impl Iterator<Item = u32> {
        self.k_min..=self.k_max
    }
}

/// A sparse set of occupied cells at one grid level.
///
/// Cells are stored under an encoded integer key; the set is immutable in
/// spirit once built and safe to share between threads. Equality is set
/// equality, independent of insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSet {
    spec: GridSpec,
    cells: HashSet<u128>,
}

impl CellSet {
    pub fn new(spec: GridSpec) -> Self {
        Self {
            spec,
            cells: HashSet::new(),
        }
    }

    /// The full grid: every cell occupied. Only sensible for small grids
    /// (used for covers of sets that fill their bounding cube, like [0,1]).
    pub fn full(spec: GridSpec) -> Result<Self, GridError> {
        let per_axis = spec.cells_per_axis();
        let total = (per_axis as f64).powi(spec.dim() as i32);
        if total > 2e8 {
            return Err(GridError::CapacityOverflow {
                base: spec.base,
                level: spec.level,
                dim: spec.dim(),
            });
        }
        let mut set = CellSet::new(spec);
        let dim = set.spec.dim();
        let mut idx = vec![0u64; dim];
        loop {
            set.insert(&idx).expect("full grid index in range");
            let mut axis = 0;
            loop {
                if axis == dim {
                    return Ok(set);
                }
                idx[axis] += 1;
                if idx[axis] < per_axis {
                    break;
                }
                idx[axis] = 0;
                axis += 1;
            }
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn insert(&mut self, idx: &[u64]) -> Result<bool, GridError> {
        let per_axis = self.spec.cells_per_axis();
        for (axis, &i) in idx.iter().enumerate() {
            if i >= per_axis {
                return Err(GridError::IndexOutOfRange {
                    index: i,
                    cells_per_axis: per_axis,
                    axis,
                });
            }
        }
        Ok(self.cells.insert(self.spec.encode(idx)))
    }

    pub fn contains(&self, idx: &[u64]) -> bool {
        self.cells.contains(&self.spec.encode(idx))
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<u64>> + '_ {
        self.cells.iter().map(move |&k| self.spec.decode(k))
    }

    /// Indices sorted lexicographically; use for any order-sensitive output.
    pub fn sorted_indices(&self) -> Vec<Vec<u64>> {
        let mut all: Vec<Vec<u64>> = self.iter().collect();
        all.sort();
        all
    }

    /// Set union with another cell set on the same grid.
    pub fn union_with(&mut self, other: CellSet) -> Result<(), GridError> {
        if self.spec != other.spec {
            return Err(GridError::GridMismatch);
        }
        self.cells.extend(other.cells);
        Ok(())
    }

    /// Keeps cells whose index passes the predicate.
    pub fn filter<P: FnMut(&[u64]) -> bool>(&self, mut keep: P) -> CellSet {
        let mut out = CellSet::new(self.spec.clone());
        for idx in self.iter() {
            if keep(&idx) {
                out.cells.insert(self.spec.encode(&idx));
            }
        }
        out
    }

    /// Parent cell (one level up) of an index at this set's level.
    pub fn parent_index(idx: &[u64], base: u32) -> Vec<u64> {
        idx.iter().map(|i| i / base as u64).collect()
    }
}

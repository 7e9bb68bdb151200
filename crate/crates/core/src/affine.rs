//! Sparse affine-linear maps `x ↦ A·x + b` with exact ℓ⁰ accounting, plus
//! the lifting that applies a map along each fixed spatial coordinate.
//!
//! A weight is nonzero iff its stored value differs from `0.0` exactly; no
//! tolerance enters the count. Matrix entries are kept as strictly-nonzero
//! triplets sorted by `(row, col)`, and `A·x` accumulates each row in
//! ascending column order before the bias is added, so cross-checks between
//! evaluation paths can use tight tolerances.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::signal::ChannelSignal;

/// A sparse affine-linear map. `entries` holds `(row, col, value)` triplets
/// with `value ≠ 0`, sorted by `(row, col)`; `bias` is dense.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
    bias: Vec<f64>,
}

impl AffineMap {
    /// Builds a map from triplets. Exact-zero triplets are dropped (so the
    /// stored-nonzero invariant holds); duplicate `(row, col)` pairs and
    /// out-of-range indices are rejected.
    pub fn new(
        rows: usize,
        cols: usize,
        triplets: Vec<(usize, usize, f64)>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(
                "affine map needs at least one row and one column".into(),
            ));
        }
        if bias.len() != rows {
            return Err(Error::IncompatibleOperands(format!(
                "bias length {} does not match {} rows",
                bias.len(),
                rows
            )));
        }
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::InvalidStructure(format!(
                    "entry ({r}, {c}) out of range for a {rows}×{cols} map"
                )));
            }
            if v != 0.0 {
                entries.push((r, c, v));
            }
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 && pair[0].1 == pair[1].1 {
                return Err(Error::InvalidStructure(format!(
                    "duplicate entry at ({}, {})",
                    pair[0].0, pair[0].1
                )));
            }
        }
        Ok(AffineMap {
            rows,
            cols,
            entries,
            bias,
        })
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        AffineMap {
            rows,
            cols,
            entries: Vec::new(),
            bias: vec![0.0; rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        AffineMap {
            rows: n,
            cols: n,
            entries: (0..n).map(|i| (i, i, 1.0)).collect(),
            bias: vec![0.0; n],
        }
    }

    /// Dense row-major constructor, mainly for tests and small fixtures.
    pub fn from_dense(matrix: &[Vec<f64>], bias: Vec<f64>) -> Result<Self> {
        let rows = matrix.len();
        let cols = matrix.first().map(|r| r.len()).unwrap_or(0);
        let mut triplets = Vec::new();
        for (r, row) in matrix.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::InvalidStructure("ragged dense matrix".into()));
            }
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((r, c, v));
                }
            }
        }
        AffineMap::new(rows, cols, triplets, bias)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// `‖A‖_{ℓ⁰} + ‖b‖_{ℓ⁰}`: stored triplets plus nonzero bias entries.
    pub fn l0_norm(&self) -> usize {
        self.entries.len() + self.bias.iter().filter(|b| **b != 0.0).count()
    }

    /// `A·x + b`. Each row accumulates from zero in ascending column order,
    /// then the bias is added.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::IncompatibleOperands(format!(
                "input length {} does not match {} columns",
                x.len(),
                self.cols
            )));
        }
        let mut y = vec![0.0; self.rows];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        for (yi, bi) in y.iter_mut().zip(&self.bias) {
            *yi += *bi;
        }
        Ok(y)
    }

    /// The lifting of this map: applies it along each fixed spatial
    /// coordinate of a channel signal, replicating the bias across the group.
    /// Input channels are read as columns, output channels as rows.
    pub fn apply_lifted(&self, x: &ChannelSignal) -> Result<ChannelSignal> {
        if x.channels() != self.cols {
            return Err(Error::IncompatibleOperands(format!(
                "signal has {} channels but the map expects {}",
                x.channels(),
                self.cols
            )));
        }
        let group = Arc::clone(x.group());
        let n = group.order();
        let mut values = vec![0.0; self.rows * n];
        for g in 0..n {
            let column: Vec<f64> = (0..self.cols).map(|i| x.value(i, g)).collect();
            let out = self.apply(&column)?;
            for (j, v) in out.into_iter().enumerate() {
                values[j * n + g] = v;
            }
        }
        ChannelSignal::new(group, self.rows, values)
    }

    /// The affine map computing `self(other(x))`; exact zeros produced by the
    /// multiplication are dropped.
    pub fn compose(&self, other: &AffineMap) -> Result<AffineMap> {
        if self.cols != other.rows {
            return Err(Error::IncompatibleOperands(format!(
                "cannot compose a map with {} columns after one with {} rows",
                self.cols, other.rows
            )));
        }
        // Group the inner map's entries by row for the shared-index lookups.
        let mut by_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); other.rows];
        for &(r, c, v) in &other.entries {
            by_row[r].push((c, v));
        }
        let mut matrix: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(r, k, v) in &self.entries {
            for &(c, w) in &by_row[k] {
                *matrix.entry((r, c)).or_insert(0.0) += v * w;
            }
        }
        let entries = matrix
            .into_iter()
            .filter(|&(_, v)| v != 0.0)
            .map(|((r, c), v)| (r, c, v))
            .collect();
        let mut bias = self.apply(&other.bias)?;
        for b in bias.iter_mut() {
            if *b == 0.0 {
                *b = 0.0; // normalize -0.0 from cancellation
            }
        }
        Ok(AffineMap {
            rows: self.rows,
            cols: other.cols,
            entries,
            bias,
        })
    }
}

/// Random sparse map for tests and generators: each entry and bias slot is
/// present with probability `density`, values standard normal.
pub fn random_sparse(
    rows: usize,
    cols: usize,
    density: f64,
    rng: &mut crate::rng::Rng,
) -> AffineMap {
    let mut triplets = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if crate::rng::uniform(rng) < density {
                triplets.push((r, c, crate::rng::standard_normal(rng)));
            }
        }
    }
    let bias = (0..rows)
        .map(|_| {
            if crate::rng::uniform(rng) < density {
                crate::rng::standard_normal(rng)
            } else {
                0.0
            }
        })
        .collect();
    AffineMap::new(rows, cols, triplets, bias).expect("generated indices are in range")
}

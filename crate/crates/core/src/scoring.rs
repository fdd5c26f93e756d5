//! Learnable edge scoring `ES(type, position)`.
//!
//! Raw parameters live in an `L x T` matrix (position-major). The scores used
//! for path generation are the per-position softmax over edge types. Positions
//! are 1-based in every public method; storage is 0-based.

use ndarray::{Array2, Axis};
use rand::Rng;

use crate::error::{Error, Result};

/// Unconstrained learnable parameters, one row per metapath position.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreParams {
    pub raw: Array2<f64>,
}

impl ScoreParams {
    pub fn new(raw: Array2<f64>) -> Result<Self> {
        if raw.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteScore);
        }
        Ok(Self { raw })
    }

    /// Uniform in `[-0.01, 0.01]`, so the initial softmax is close to uniform.
    pub fn init_uniform<R: Rng + ?Sized>(positions: usize, num_types: usize, rng: &mut R) -> Self {
        let raw =
            Array2::from_shape_simple_fn((positions, num_types), || rng.random_range(-0.01..=0.01));
        Self { raw }
    }

    pub fn positions(&self) -> usize {
        self.raw.nrows()
    }

    pub fn num_types(&self) -> usize {
        self.raw.ncols()
    }

    /// Softmax over types for each position, with max subtraction.
    pub fn materialize_softmax(&self) -> ScoreTable {
        let mut s = self.raw.clone();
        for mut row in s.axis_iter_mut(Axis(0)) {
            let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
            row.mapv_inplace(|x| (x - max).exp());
            let sum = row.sum();
            row.mapv_inplace(|x| x / sum);
        }
        ScoreTable { s }
    }

    /// Pulls a gradient on the materialized table back through the softmax:
    /// `g_raw[i][t] = s[i][t] * (g[i][t] - sum_u g[i][u] * s[i][u])`.
    pub fn softmax_backward(&self, grad_table: &Array2<f64>) -> Result<Array2<f64>> {
        if grad_table.dim() != self.raw.dim() {
            return Err(Error::ShapeMismatch {
                what: "score table gradient",
                expected: self.raw.dim(),
                got: grad_table.dim(),
            });
        }
        let table = self.materialize_softmax();
        let mut out = Array2::zeros(self.raw.dim());
        for ((s, g), mut o) in table
            .s
            .axis_iter(Axis(0))
            .zip(grad_table.axis_iter(Axis(0)))
            .zip(out.axis_iter_mut(Axis(0)))
        {
            let dot: f64 = s.iter().zip(g.iter()).map(|(a, b)| a * b).sum();
            for ((o, &s), &g) in o.iter_mut().zip(s.iter()).zip(g.iter()) {
                *o = s * (g - dot);
            }
        }
        Ok(out)
    }
}

/// Materialized scores `s[position][type]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    s: Array2<f64>,
}

impl ScoreTable {
    /// Injects scores directly, bypassing the softmax. Entries must be finite.
    pub fn from_scores(s: Array2<f64>) -> Result<Self> {
        if s.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteScore);
        }
        Ok(Self { s })
    }

    pub fn scores(&self) -> &Array2<f64> {
        &self.s
    }

    pub fn positions(&self) -> usize {
        self.s.nrows()
    }

    pub fn num_types(&self) -> usize {
        self.s.ncols()
    }

    /// Score of `edge_type` at 1-based `position`.
    ///
    /// Panics if either index is out of range.
    #[inline]
    pub fn score(&self, position: usize, edge_type: usize) -> f64 {
        self.s[[position - 1, edge_type]]
    }

    /// 0-based accessor used by the traversal kernels.
    #[inline]
    pub(crate) fn at(&self, pos0: usize, edge_type: usize) -> f64 {
        self.s[[pos0, edge_type]]
    }

    /// Product of per-position scores for a type sequence whose first edge
    /// sits at 1-based `start_position`.
    pub fn score_path(&self, types: &[usize], start_position: usize) -> Result<f64> {
        self.check_span(start_position, types.len())?;
        let mut score = 1.0;
        for (i, &t) in types.iter().enumerate() {
            if t >= self.num_types() {
                return Err(Error::UnknownScoreType {
                    edge_type: t,
                    num_types: self.num_types(),
                });
            }
            score *= self.at(start_position - 1 + i, t);
        }
        Ok(score)
    }

    /// Checks that `len` positions starting at 1-based `start` fit the table.
    pub(crate) fn check_span(&self, start: usize, len: usize) -> Result<()> {
        if start == 0 || start + len > self.positions() + 1 {
            return Err(Error::PositionOverflow {
                start,
                end: start + len - 1,
                available: self.positions(),
            });
        }
        Ok(())
    }

    /// Checks that every edge type of a graph has a score column.
    pub(crate) fn check_types(&self, num_edge_types: usize) -> Result<()> {
        if num_edge_types > self.num_types() {
            return Err(Error::UnknownScoreType {
                edge_type: num_edge_types - 1,
                num_types: self.num_types(),
            });
        }
        Ok(())
    }

    /// Largest score per position (0-based rows).
    pub(crate) fn row_max(&self) -> Vec<f64> {
        self.s
            .axis_iter(Axis(0))
            .map(|r| r.fold(f64::NEG_INFINITY, |m, &x| m.max(x)))
            .collect()
    }
}

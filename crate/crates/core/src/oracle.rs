//! Dense matrix-chain reference for metapath generation.
//!
//! One `n x n` matrix per metapath position holds the score of each edge at
//! that position; the left-to-right product of the `l` matrices equals the
//! metapath graph. Quadratic memory and a cubic triple loop keep this usable
//! only at desk scale, which is all it is for.

use crate::error::{Error, Result};
use crate::graph::HeteroGraph;
use crate::metapath_graph::MetapathGraph;
use crate::scoring::ScoreTable;

pub const MAX_DENSE_VERTICES: usize = 2048;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Result<Self> {
        if n > MAX_DENSE_VERTICES {
            return Err(Error::OracleTooLarge {
                n,
                max: MAX_DENSE_VERTICES,
            });
        }
        Ok(Self {
            n,
            data: vec![0.0; n * n],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    #[inline]
    fn add(&mut self, row: usize, col: usize, x: f64) {
        self.data[row * self.n + col] += x;
    }

    /// Naive `self * rhs`. Zeros are multiplied like any other entry so the
    /// cost is always cubic.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.n != rhs.n {
            return Err(Error::VertexCountMismatch {
                left: self.n,
                right: rhs.n,
            });
        }
        let n = self.n;
        let mut out = DenseMatrix::zeros(n)?;
        for i in 0..n {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                let rhs_row = &rhs.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }
}

/// Score-scaled adjacency for 1-based `position`; parallel edges add up.
pub fn build_position_matrix(
    g: &HeteroGraph,
    table: &ScoreTable,
    position: usize,
) -> Result<DenseMatrix> {
    table.check_span(position, 1)?;
    table.check_types(g.num_edge_types())?;
    let mut m = DenseMatrix::zeros(g.num_vertices())?;
    for e in g.edges() {
        m.add(e.src, e.dst, table.score(position, e.edge_type));
    }
    Ok(m)
}

/// Left-to-right product of the chain.
pub fn chain_product(mats: &[DenseMatrix]) -> Result<DenseMatrix> {
    let (first, rest) = mats
        .split_first()
        .ok_or(Error::InvalidLength { got: 0, min: 1 })?;
    rest.iter().try_fold(first.clone(), |acc, m| acc.matmul(m))
}

/// The full dense route: position matrices `1..=l` multiplied together.
pub fn dense_metapath(g: &HeteroGraph, table: &ScoreTable, l: usize) -> Result<DenseMatrix> {
    let mats = (1..=l)
        .map(|p| build_position_matrix(g, table, p))
        .collect::<Result<Vec<_>>>()?;
    chain_product(&mats)
}

/// Dense copy of a sparse metapath graph.
pub fn densify(mg: &MetapathGraph) -> Result<DenseMatrix> {
    let mut m = DenseMatrix::zeros(mg.num_vertices())?;
    for (s, d, w) in mg.edges() {
        m.add(s, d, w);
    }
    Ok(m)
}

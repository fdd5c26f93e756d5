//! Weighted directed sparse graph produced by metapath generation.

use std::ops::Range;

use crate::error::{Error, Result};

/// Compressed weighted graph. Each row is sorted by destination and holds no
/// duplicate destinations.
#[derive(Debug, Clone, PartialEq)]
pub struct MetapathGraph {
    num_vertices: usize,
    out_index: Vec<usize>,
    edge_dst: Vec<usize>,
    edge_weight: Vec<f64>,
}

impl MetapathGraph {
    pub fn empty(num_vertices: usize) -> Self {
        Self {
            num_vertices,
            out_index: vec![0; num_vertices + 1],
            edge_dst: Vec::new(),
            edge_weight: Vec::new(),
        }
    }

    /// Assembles from raw compressed arrays; rows must already be sorted and
    /// duplicate-free.
    pub(crate) fn from_parts(
        num_vertices: usize,
        out_index: Vec<usize>,
        edge_dst: Vec<usize>,
        edge_weight: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(out_index.len(), num_vertices + 1);
        debug_assert_eq!(*out_index.last().unwrap(), edge_dst.len());
        debug_assert_eq!(edge_dst.len(), edge_weight.len());
        debug_assert!((0..num_vertices).all(|v| {
            edge_dst[out_index[v]..out_index[v + 1]]
                .windows(2)
                .all(|w| w[0] < w[1])
        }));
        Self {
            num_vertices,
            out_index,
            edge_dst,
            edge_weight,
        }
    }

    /// Builds from `(src, dst, weight)` triplets, summing duplicate pairs.
    pub fn from_triplets<I>(num_vertices: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut items: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for (i, &(s, d, _)) in items.iter().enumerate() {
            for (field, id) in [("src", s), ("dst", d)] {
                if id >= num_vertices {
                    return Err(Error::VertexOutOfRange {
                        edge_index: i,
                        field,
                        id,
                        num_vertices,
                    });
                }
            }
        }
        items.sort_by_key(|&(s, d, _)| (s, d));
        let mut out_index = vec![0usize; num_vertices + 1];
        let mut edge_dst = Vec::with_capacity(items.len());
        let mut edge_weight: Vec<f64> = Vec::with_capacity(items.len());
        let mut last = None;
        for (s, d, w) in items {
            if last == Some((s, d)) {
                *edge_weight.last_mut().unwrap() += w;
            } else {
                edge_dst.push(d);
                edge_weight.push(w);
                out_index[s + 1] += 1;
                last = Some((s, d));
            }
        }
        for v in 0..num_vertices {
            out_index[v + 1] += out_index[v];
        }
        Ok(Self::from_parts(
            num_vertices,
            out_index,
            edge_dst,
            edge_weight,
        ))
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edge_dst.len()
    }

    pub fn out_index(&self) -> &[usize] {
        &self.out_index
    }

    pub fn edge_dst(&self) -> &[usize] {
        &self.edge_dst
    }

    pub fn edge_weights(&self) -> &[f64] {
        &self.edge_weight
    }

    #[inline]
    pub fn row_range(&self, v: usize) -> Range<usize> {
        self.out_index[v]..self.out_index[v + 1]
    }

    /// Destinations and weights of `v`'s row.
    #[inline]
    pub fn row(&self, v: usize) -> (&[usize], &[f64]) {
        let r = self.row_range(v);
        (&self.edge_dst[r.clone()], &self.edge_weight[r])
    }

    /// Storage index of edge `(src, dst)`.
    pub fn edge_index(&self, src: usize, dst: usize) -> Option<usize> {
        if src >= self.num_vertices {
            return None;
        }
        let r = self.row_range(src);
        self.edge_dst[r.clone()]
            .binary_search(&dst)
            .ok()
            .map(|i| r.start + i)
    }

    pub fn weight(&self, src: usize, dst: usize) -> Option<f64> {
        self.edge_index(src, dst).map(|e| self.edge_weight[e])
    }

    /// `(src, dst, weight)` in storage order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.num_vertices).flat_map(move |v| {
            let (dst, w) = self.row(v);
            dst.iter().zip(w).map(move |(&d, &w)| (v, d, w))
        })
    }

    /// Same structure with a replacement value per edge, e.g. an edge-aligned
    /// gradient.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.num_edges() {
            return Err(Error::ShapeMismatch {
                what: "edge weights",
                expected: (self.num_edges(), 1),
                got: (weights.len(), 1),
            });
        }
        Ok(Self {
            num_vertices: self.num_vertices,
            out_index: self.out_index.clone(),
            edge_dst: self.edge_dst.clone(),
            edge_weight: weights,
        })
    }

    /// True when both graphs hold exactly the same `(src, dst)` pairs.
    pub fn same_structure(&self, other: &Self) -> bool {
        self.num_vertices == other.num_vertices
            && self.out_index == other.out_index
            && self.edge_dst == other.edge_dst
    }

    /// In-edge view: for each destination, the storage indices of its
    /// incoming edges in ascending source order.
    pub fn transpose(&self) -> Transpose {
        let n = self.num_vertices;
        let mut in_index = vec![0usize; n + 1];
        for &d in &self.edge_dst {
            in_index[d + 1] += 1;
        }
        for v in 0..n {
            in_index[v + 1] += in_index[v];
        }
        let mut cursor = in_index[..n].to_vec();
        let mut in_src = vec![0usize; self.num_edges()];
        let mut in_edge = vec![0usize; self.num_edges()];
        for u in 0..n {
            for e in self.row_range(u) {
                let d = self.edge_dst[e];
                in_src[cursor[d]] = u;
                in_edge[cursor[d]] = e;
                cursor[d] += 1;
            }
        }
        Transpose {
            in_index,
            in_src,
            in_edge,
        }
    }
}

/// Column-major index over a [`MetapathGraph`].
#[derive(Debug, Clone)]
pub struct Transpose {
    pub in_index: Vec<usize>,
    pub in_src: Vec<usize>,
    pub in_edge: Vec<usize>,
}

impl Transpose {
    #[inline]
    pub fn col_range(&self, v: usize) -> Range<usize> {
        self.in_index[v]..self.in_index[v + 1]
    }
}

/// Splits `data` into consecutive mutable chunks delimited by `offsets`,
/// scaled by `stride` elements per entry.
pub(crate) fn split_rows_mut<'a, T>(
    mut data: &'a mut [T],
    offsets: &[usize],
    stride: usize,
) -> Vec<&'a mut [T]> {
    let mut rows = Vec::with_capacity(offsets.len().saturating_sub(1));
    for w in offsets.windows(2) {
        let (head, tail) = data.split_at_mut((w[1] - w[0]) * stride);
        rows.push(head);
        data = tail;
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let mg =
            MetapathGraph::from_triplets(3, [(1, 2, 1.0), (0, 2, 0.5), (1, 0, 2.0), (1, 2, 3.0)])
                .unwrap();
        assert_eq!(mg.num_edges(), 3);
        assert_eq!(mg.row(1).0, &[0, 2]);
        assert_eq!(mg.weight(1, 2), Some(4.0));
        assert_eq!(mg.weight(2, 2), None);
        assert_eq!(
            mg.edges().collect::<Vec<_>>(),
            vec![(0, 2, 0.5), (1, 0, 2.0), (1, 2, 4.0)]
        );
    }

    #[test]
    fn triplets_reject_out_of_range() {
        assert!(matches!(
            MetapathGraph::from_triplets(2, [(0, 2, 1.0)]),
            Err(Error::VertexOutOfRange { field: "dst", .. })
        ));
    }

    #[test]
    fn transpose_lists_sources_in_order() {
        let mg = MetapathGraph::from_triplets(3, [(0, 2, 1.0), (1, 2, 2.0), (2, 0, 3.0)]).unwrap();
        let t = mg.transpose();
        let col2: Vec<_> = t.col_range(2).map(|i| t.in_src[i]).collect();
        assert_eq!(col2, vec![0, 1]);
        let e = t.in_edge[t.col_range(0).start];
        assert_eq!(mg.edge_weights()[e], 3.0);
    }

    #[test]
    fn split_rows_respects_stride() {
        let mut data = vec![0; 10];
        let rows = split_rows_mut(&mut data, &[0, 2, 2, 5], 2);
        assert_eq!(
            rows.iter().map(|r| r.len()).collect::<Vec<_>>(),
            vec![4, 0, 6]
        );
    }
}

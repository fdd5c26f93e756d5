//! Typed directed graph in compressed adjacency form.
//!
//! Edges are grouped by source vertex. Each edge carries a destination and an
//! edge-type id. Self-edge augmentation appends one `(v, v, self_type)` edge to
//! every vertex so that fixed-length enumeration can emulate shorter paths.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// One `(src, dst, type)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub edge_type: usize,
}

impl Edge {
    pub fn new(src: usize, dst: usize, edge_type: usize) -> Self {
        Self {
            src,
            dst,
            edge_type,
        }
    }
}

impl From<(usize, usize, usize)> for Edge {
    fn from((src, dst, edge_type): (usize, usize, usize)) -> Self {
        Self::new(src, dst, edge_type)
    }
}

/// Immutable heterogeneous graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeteroGraph {
    num_vertices: usize,
    num_edge_types: usize,
    self_type: Option<usize>,
    out_index: Vec<usize>,
    edge_dst: Vec<usize>,
    edge_type: Vec<usize>,
}

impl HeteroGraph {
    /// Builds the compressed form. A source's edges keep their input order.
    pub fn build<I, E>(edges: I, num_vertices: usize, num_edge_types: usize) -> Result<Self>
    where
        I: IntoIterator<Item = E>,
        E: Into<Edge>,
    {
        if num_edge_types == 0 {
            return Err(Error::NoEdgeTypes);
        }
        let edges: Vec<Edge> = edges.into_iter().map(Into::into).collect();
        let mut out_index = vec![0usize; num_vertices + 1];
        for (i, e) in edges.iter().enumerate() {
            for (field, id) in [("src", e.src), ("dst", e.dst)] {
                if id >= num_vertices {
                    return Err(Error::VertexOutOfRange {
                        edge_index: i,
                        field,
                        id,
                        num_vertices,
                    });
                }
            }
            if e.edge_type >= num_edge_types {
                return Err(Error::EdgeTypeOutOfRange {
                    edge_index: i,
                    edge_type: e.edge_type,
                    num_edge_types,
                });
            }
            out_index[e.src + 1] += 1;
        }
        for v in 0..num_vertices {
            out_index[v + 1] += out_index[v];
        }

        // stable counting sort by source
        let mut cursor = out_index[..num_vertices].to_vec();
        let mut edge_dst = vec![0usize; edges.len()];
        let mut edge_type = vec![0usize; edges.len()];
        for e in &edges {
            let slot = cursor[e.src];
            edge_dst[slot] = e.dst;
            edge_type[slot] = e.edge_type;
            cursor[e.src] += 1;
        }

        Ok(Self {
            num_vertices,
            num_edge_types,
            self_type: None,
            out_index,
            edge_dst,
            edge_type,
        })
    }

    /// Returns a copy with one self-edge per vertex, typed with a freshly
    /// allocated last type id.
    pub fn add_self_edges(&self) -> Result<Self> {
        if let Some(self_type) = self.self_type {
            return Err(Error::AlreadyAugmented { self_type });
        }
        let n = self.num_vertices;
        let self_type = self.num_edge_types;
        let mut out_index = Vec::with_capacity(n + 1);
        let mut edge_dst = Vec::with_capacity(self.num_edges() + n);
        let mut edge_type = Vec::with_capacity(self.num_edges() + n);
        out_index.push(0);
        for v in 0..n {
            let r = self.edge_range(v);
            edge_dst.extend_from_slice(&self.edge_dst[r.clone()]);
            edge_type.extend_from_slice(&self.edge_type[r]);
            edge_dst.push(v);
            edge_type.push(self_type);
            out_index.push(edge_dst.len());
        }
        Ok(Self {
            num_vertices: n,
            num_edge_types: self.num_edge_types + 1,
            self_type: Some(self_type),
            out_index,
            edge_dst,
            edge_type,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edge_dst.len()
    }

    /// Number of edge types, including the self-edge type once augmented.
    pub fn num_edge_types(&self) -> usize {
        self.num_edge_types
    }

    /// The reserved self-edge type, if the graph has been augmented.
    pub fn self_type(&self) -> Option<usize> {
        self.self_type
    }

    pub fn is_augmented(&self) -> bool {
        self.self_type.is_some()
    }

    pub fn out_index(&self) -> &[usize] {
        &self.out_index
    }

    pub fn edge_dst(&self) -> &[usize] {
        &self.edge_dst
    }

    pub fn edge_types(&self) -> &[usize] {
        &self.edge_type
    }

    /// Positions of `v`'s out-edges in the edge arrays.
    #[inline]
    pub fn edge_range(&self, v: usize) -> Range<usize> {
        self.out_index[v]..self.out_index[v + 1]
    }

    #[inline]
    pub fn out_degree(&self, v: usize) -> usize {
        self.out_index[v + 1] - self.out_index[v]
    }

    /// `(dst, type)` pairs of `v`'s out-edges.
    pub fn out_edges(&self, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let r = self.edge_range(v);
        self.edge_dst[r.clone()]
            .iter()
            .copied()
            .zip(self.edge_type[r].iter().copied())
    }

    /// All edges in storage order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.num_vertices).flat_map(move |v| {
            self.out_edges(v)
                .map(move |(dst, edge_type)| Edge::new(v, dst, edge_type))
        })
    }

    /// Index of the first edge `src -> dst` with the given type.
    pub fn find_edge(&self, src: usize, dst: usize, edge_type: usize) -> Option<usize> {
        if src >= self.num_vertices {
            return None;
        }
        self.edge_range(src)
            .find(|&e| self.edge_dst[e] == dst && self.edge_type[e] == edge_type)
    }

    /// Per-vertex count of distinct endpoints reachable by paths of exactly
    /// `length` edges. The sum is the edge count of the metapath graph for
    /// that length, so outputs can be allocated once up front.
    pub fn symbolic_metapath_size(&self, length: usize) -> Result<Vec<usize>> {
        if length == 0 {
            return Err(Error::InvalidLength { got: 0, min: 1 });
        }
        let n = self.num_vertices;
        Ok((0..n)
            .into_par_iter()
            .map_init(
                || FrontierScratch::new(n),
                |scratch, v| scratch.endpoints(self, v, length).len(),
            )
            .collect())
    }
}

/// Reusable marker arrays for set-valued breadth-first frontiers.
pub(crate) struct FrontierScratch {
    mark: Vec<bool>,
    current: Vec<usize>,
    next: Vec<usize>,
}

impl FrontierScratch {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            mark: vec![false; n],
            current: Vec::new(),
            next: Vec::new(),
        }
    }

    /// Distinct vertices at exactly `length` hops from `source`, unsorted.
    pub(crate) fn endpoints(&mut self, g: &HeteroGraph, source: usize, length: usize) -> &[usize] {
        self.current.clear();
        self.current.push(source);
        for _ in 0..length {
            self.next.clear();
            for &x in &self.current {
                for &y in &g.edge_dst[g.edge_range(x)] {
                    if !self.mark[y] {
                        self.mark[y] = true;
                        self.next.push(y);
                    }
                }
            }
            for &y in &self.next {
                self.mark[y] = false;
            }
            std::mem::swap(&mut self.current, &mut self.next);
        }
        &self.current
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn fig1() -> HeteroGraph {
        // A..E = 0..4, solid = 0, dashed = 1
        HeteroGraph::build(
            [(0, 1, 0), (1, 2, 1), (0, 3, 1), (3, 2, 0), (3, 4, 1)],
            5,
            2,
        )
        .unwrap()
    }

    #[test]
    fn empty_graph() {
        let g = HeteroGraph::build(Vec::<Edge>::new(), 3, 2).unwrap();
        assert_eq!(g.num_vertices(), 3);
        assert_eq!(g.num_edges(), 0);
        assert_eq!(g.out_index(), &[0, 0, 0, 0]);
    }

    #[test]
    fn fig1_shape() {
        let g = fig1();
        assert_eq!(g.num_vertices(), 5);
        assert_eq!(g.num_edges(), 5);
        assert_eq!(g.out_degree(0), 2);
        assert_eq!(g.out_edges(0).collect::<Vec<_>>(), vec![(1, 0), (3, 1)]);
    }

    #[test]
    fn out_of_range_dst_names_edge() {
        let err = HeteroGraph::build([(0, 5, 0)], 3, 2).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("dst 5 out of range"), "{msg}");
        assert!(msg.starts_with("edge 0"), "{msg}");
    }

    #[test]
    fn out_of_range_type() {
        let err = HeteroGraph::build([(0, 1, 0), (1, 2, 7)], 3, 2).unwrap_err();
        assert!(matches!(
            err,
            Error::EdgeTypeOutOfRange {
                edge_index: 1,
                edge_type: 7,
                ..
            }
        ));
        assert!(matches!(
            HeteroGraph::build(Vec::<Edge>::new(), 3, 0),
            Err(Error::NoEdgeTypes)
        ));
    }

    #[test]
    fn source_order_is_preserved() {
        let g = HeteroGraph::build([(1, 0, 0), (0, 2, 1), (1, 2, 1), (0, 1, 0)], 3, 2).unwrap();
        assert_eq!(g.out_edges(0).collect::<Vec<_>>(), vec![(2, 1), (1, 0)]);
        assert_eq!(g.out_edges(1).collect::<Vec<_>>(), vec![(0, 0), (2, 1)]);
    }

    #[test]
    fn self_edges_on_empty_graph() {
        let g = HeteroGraph::build(Vec::<Edge>::new(), 3, 2)
            .unwrap()
            .add_self_edges()
            .unwrap();
        assert_eq!(g.self_type(), Some(2));
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(
            edges,
            (0..3).map(|v| Edge::new(v, v, 2)).collect::<Vec<_>>()
        );
    }

    #[test]
    fn self_edges_on_fig1() {
        let g = fig1();
        let a = g.add_self_edges().unwrap();
        assert_eq!(a.num_edges(), 10);
        assert_eq!(a.num_edge_types(), 3);
        for v in 0..5 {
            let self_edges: Vec<_> = a.out_edges(v).filter(|&(_, t)| t == 2).collect();
            assert_eq!(self_edges, vec![(v, 2)]);
            let before: Vec<_> = g.out_edges(v).collect();
            let after: Vec<_> = a.out_edges(v).filter(|&(_, t)| t != 2).collect();
            assert_eq!(before, after);
        }
        assert!(matches!(
            a.add_self_edges(),
            Err(Error::AlreadyAugmented { self_type: 2 })
        ));
    }

    #[test]
    fn symbolic_size_fig1() {
        let g = fig1();
        let counts = g.symbolic_metapath_size(2).unwrap();
        assert_eq!(counts, vec![2, 0, 0, 0, 0]);
        assert!(matches!(
            g.symbolic_metapath_size(0),
            Err(Error::InvalidLength { .. })
        ));
    }

    #[test]
    fn symbolic_size_length_one_counts_distinct_neighbours() {
        let g = HeteroGraph::build([(0, 1, 0), (0, 1, 1), (0, 2, 0), (2, 2, 1)], 3, 2).unwrap();
        assert_eq!(g.symbolic_metapath_size(1).unwrap(), vec![2, 0, 1]);
    }
}

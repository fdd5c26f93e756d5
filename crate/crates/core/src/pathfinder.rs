//! Exact metapath-graph generation by path enumeration.
//!
//! `MG.W(v, x)` is the sum over all `l`-edge paths from `v` to `x` of the
//! product of per-position edge scores. Two enumeration strategies are
//! available:
//!
//! - [`EnumStrategy::DepthFirst`] walks every path explicitly and keeps only
//!   one active path per worker.
//! - [`EnumStrategy::LevelByLevel`] extends a per-source frontier one edge at a
//!   time, so paths that share a prefix endpoint are merged before they are
//!   extended.
//!
//! [`generate_split`] enumerates half-length paths once, scores them under two
//! position offsets and composes the two intermediate graphs. Backward passes
//! re-enumerate paths instead of storing them.
//!
//! Work is partitioned by source vertex and every row is computed from the
//! source alone, so outputs do not depend on the number of worker threads.
//! Gradient partials are reduced over fixed vertex blocks in block order for
//! the same reason.

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::HeteroGraph;
use crate::metapath_graph::{split_rows_mut, MetapathGraph};
use crate::scoring::ScoreTable;

const GRAD_BLOCK: usize = 64;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum EnumStrategy {
    DepthFirst,
    #[default]
    LevelByLevel,
}

/// Output of [`generate_split`]: the two half-length graphs and their
/// composition.
#[derive(Debug, Clone)]
pub struct SplitResult {
    pub mg1: MetapathGraph,
    pub mg2: MetapathGraph,
    pub mg: MetapathGraph,
}

/// Sizes of the two halves for a split of length `l`: `(ceil(l/2), floor(l/2))`.
pub fn split_lengths(l: usize) -> (usize, usize) {
    (l.div_ceil(2), l / 2)
}

pub fn generate_vanilla(
    g: &HeteroGraph,
    table: &ScoreTable,
    l: usize,
    strategy: EnumStrategy,
) -> Result<MetapathGraph> {
    if l == 0 {
        return Err(Error::InvalidLength { got: 0, min: 1 });
    }
    let mut out = generate_paths(g, table, &[1], l, strategy)?;
    Ok(out.pop().unwrap())
}

pub fn generate_split(
    g: &HeteroGraph,
    table: &ScoreTable,
    l: usize,
    strategy: EnumStrategy,
) -> Result<SplitResult> {
    if l < 2 {
        return Err(Error::InvalidLength { got: l, min: 2 });
    }
    let (first, second) = split_lengths(l);
    let (mg1, mg2) = if first == second {
        // one enumeration, scored at offsets 1 and first + 1
        let mut both = generate_paths(g, table, &[1, first + 1], first, strategy)?;
        let mg2 = both.pop().unwrap();
        (both.pop().unwrap(), mg2)
    } else {
        let mg1 = generate_paths(g, table, &[1], first, strategy)?
            .pop()
            .unwrap();
        let mg2 = generate_paths(g, table, &[first + 1], second, strategy)?
            .pop()
            .unwrap();
        (mg1, mg2)
    };
    let mg = compose_metapath_graphs(&mg1, &mg2)?;
    Ok(SplitResult { mg1, mg2, mg })
}

/// Sparse product: `weight(a, c) = sum_b w1(a, b) * w2(b, c)`, with a symbolic
/// pass that sizes the output before the numeric pass fills it.
pub fn compose_metapath_graphs(mg1: &MetapathGraph, mg2: &MetapathGraph) -> Result<MetapathGraph> {
    let n = mg1.num_vertices();
    if mg2.num_vertices() != n {
        return Err(Error::VertexCountMismatch {
            left: n,
            right: mg2.num_vertices(),
        });
    }
    let counts: Vec<usize> = (0..n)
        .into_par_iter()
        .map_init(
            || RowScratch::new(n, 1),
            |s, a| {
                for &b in mg1.row(a).0 {
                    for &c in mg2.row(b).0 {
                        s.touch(c);
                    }
                }
                s.clear_marks()
            },
        )
        .collect();
    let mut out = assemble(n, &counts, 1, |s, a, dst, w| {
        let (mid, w1) = mg1.row(a);
        for (&b, &wab) in mid.iter().zip(w1) {
            let (ends, w2) = mg2.row(b);
            for (&c, &wbc) in ends.iter().zip(w2) {
                s.touch(c);
                s.acc[c] += wab * wbc;
            }
        }
        s.drain_sorted(dst, w);
    });
    Ok(out.pop().unwrap())
}

/// Gradients of a composed graph's weights with respect to the two factors,
/// aligned with `mg1` and `mg2` edge storage:
/// `d/dw1(a,b) = sum_c grad(a,c) * w2(b,c)` and
/// `d/dw2(b,c) = sum_a grad(a,c) * w1(a,b)`.
pub fn compose_backward(
    mg1: &MetapathGraph,
    mg2: &MetapathGraph,
    grad: &MetapathGraph,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = mg1.num_vertices();
    for other in [mg2.num_vertices(), grad.num_vertices()] {
        if other != n {
            return Err(Error::VertexCountMismatch {
                left: n,
                right: other,
            });
        }
    }

    let mut grad1 = vec![0.0; mg1.num_edges()];
    split_rows_mut(&mut grad1, mg1.out_index(), 1)
        .into_par_iter()
        .enumerate()
        .with_min_len(32)
        .for_each_init(
            || vec![0.0; n],
            |dense, (a, out)| {
                let (gd, gw) = grad.row(a);
                if gd.is_empty() {
                    return;
                }
                for (&c, &x) in gd.iter().zip(gw) {
                    dense[c] = x;
                }
                for (o, &b) in out.iter_mut().zip(mg1.row(a).0) {
                    let (ends, w2) = mg2.row(b);
                    *o = ends.iter().zip(w2).map(|(&c, &w)| dense[c] * w).sum();
                }
                for &c in gd {
                    dense[c] = 0.0;
                }
            },
        );

    let by_mid = mg1.transpose();
    let w1 = mg1.edge_weights();
    let mut grad2 = vec![0.0; mg2.num_edges()];
    split_rows_mut(&mut grad2, mg2.out_index(), 1)
        .into_par_iter()
        .enumerate()
        .with_min_len(32)
        .for_each(|(b, out)| {
            let ends = mg2.row(b).0;
            for i in by_mid.col_range(b) {
                let a = by_mid.in_src[i];
                let wab = w1[by_mid.in_edge[i]];
                let (gd, gw) = grad.row(a);
                if gd.is_empty() {
                    continue;
                }
                for (o, c) in out.iter_mut().zip(ends) {
                    if let Ok(j) = gd.binary_search(c) {
                        *o += gw[j] * wab;
                    }
                }
            }
        });
    Ok((grad1, grad2))
}

/// Gradient of `sum_(u,v) grad_mg(u,v) * MG(u,v)` with respect to the score
/// table, recomputing the `l`-edge paths rather than reading stored ones.
pub fn backward_scores(
    g: &HeteroGraph,
    table: &ScoreTable,
    l: usize,
    grad_mg: &MetapathGraph,
    strategy: EnumStrategy,
) -> Result<Array2<f64>> {
    if l == 0 {
        return Err(Error::InvalidLength { got: 0, min: 1 });
    }
    backward_paths(g, table, 1, l, grad_mg, strategy)
}

/// Score-table gradient for the split route: the composed gradient is pulled
/// back onto both halves, then each half re-enumerates its own paths.
pub fn backward_split(
    g: &HeteroGraph,
    table: &ScoreTable,
    l: usize,
    split: &SplitResult,
    grad_mg: &MetapathGraph,
    strategy: EnumStrategy,
) -> Result<Array2<f64>> {
    if l < 2 {
        return Err(Error::InvalidLength { got: l, min: 2 });
    }
    let (first, second) = split_lengths(l);
    let (g1, g2) = compose_backward(&split.mg1, &split.mg2, grad_mg)?;
    let g1 = split.mg1.with_weights(g1)?;
    let g2 = split.mg2.with_weights(g2)?;
    let mut grad = backward_paths(g, table, 1, first, &g1, strategy)?;
    grad += &backward_paths(g, table, first + 1, second, &g2, strategy)?;
    Ok(grad)
}

fn check_inputs(g: &HeteroGraph, table: &ScoreTable, start: usize, len: usize) -> Result<()> {
    table.check_span(start, len)?;
    table.check_types(g.num_edge_types())
}

/// Enumerates `len`-edge paths once and scores them at each 1-based start
/// position in `starts`, producing one graph per start (same structure).
pub(crate) fn generate_paths(
    g: &HeteroGraph,
    table: &ScoreTable,
    starts: &[usize],
    len: usize,
    strategy: EnumStrategy,
) -> Result<Vec<MetapathGraph>> {
    for &s in starts {
        check_inputs(g, table, s, len)?;
    }
    let n = g.num_vertices();
    let k = starts.len();
    let counts = g.symbolic_metapath_size(len)?;
    let offsets: Vec<usize> = starts.iter().map(|s| s - 1).collect();
    Ok(assemble(n, &counts, k, |s, v, dst, w| {
        match strategy {
            EnumStrategy::LevelByLevel => s.level_forward(g, table, &offsets, len, v),
            EnumStrategy::DepthFirst => {
                s.prefix.clear();
                s.prefix.resize((len + 1) * k, 0.0);
                s.prefix[..k].fill(1.0);
                s.dfs_forward(g, table, &offsets, len, v, 0);
            }
        }
        s.drain_sorted(dst, w);
    }))
}

fn backward_paths(
    g: &HeteroGraph,
    table: &ScoreTable,
    start: usize,
    len: usize,
    grad: &MetapathGraph,
    strategy: EnumStrategy,
) -> Result<Array2<f64>> {
    check_inputs(g, table, start, len)?;
    let n = g.num_vertices();
    if grad.num_vertices() != n {
        return Err(Error::VertexCountMismatch {
            left: n,
            right: grad.num_vertices(),
        });
    }
    let shape = table.scores().dim();
    let offset = start - 1;
    let blocks = n.div_ceil(GRAD_BLOCK);
    let partials: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map_init(
            || RowScratch::new(n, 1),
            |s, b| {
                let mut local = vec![0.0; shape.0 * shape.1];
                for v in b * GRAD_BLOCK..((b + 1) * GRAD_BLOCK).min(n) {
                    let (gd, gw) = grad.row(v);
                    if gd.is_empty() {
                        continue;
                    }
                    for (&c, &x) in gd.iter().zip(gw) {
                        s.grad_row[c] = x;
                    }
                    match strategy {
                        EnumStrategy::LevelByLevel => {
                            s.level_backward(g, table, offset, len, v, &mut local)
                        }
                        EnumStrategy::DepthFirst => {
                            s.prefix.clear();
                            s.prefix.resize(len + 1, 1.0);
                            s.types.clear();
                            s.types.resize(len, 0);
                            s.dfs_backward(g, table, offset, len, v, 0, &mut local);
                        }
                    }
                    for &c in gd {
                        s.grad_row[c] = 0.0;
                    }
                }
                local
            },
        )
        .collect();
    let mut total = vec![0.0; shape.0 * shape.1];
    for p in partials {
        for (t, x) in total.iter_mut().zip(p) {
            *t += x;
        }
    }
    Ok(Array2::from_shape_vec(shape, total).expect("gradient buffer matches table shape"))
}

/// Fills rows in parallel into storage sized by `counts`. Each row gets `k`
/// interleaved weights per edge; the result is split into `k` graphs.
fn assemble<F>(n: usize, counts: &[usize], k: usize, fill: F) -> Vec<MetapathGraph>
where
    F: Fn(&mut RowScratch, usize, &mut [usize], &mut [f64]) + Sync,
{
    let mut out_index = Vec::with_capacity(n + 1);
    out_index.push(0);
    for &c in counts {
        out_index.push(out_index.last().unwrap() + c);
    }
    let nnz = out_index[n];
    let mut dst = vec![0usize; nnz];
    let mut weights = vec![0.0f64; nnz * k];
    split_rows_mut(&mut dst, &out_index, 1)
        .into_par_iter()
        .zip(split_rows_mut(&mut weights, &out_index, k))
        .enumerate()
        .with_min_len(32)
        .for_each_init(|| RowScratch::new(n, k), |s, (v, (d, w))| fill(s, v, d, w));
    (0..k)
        .map(|j| {
            let w: Vec<f64> = weights.iter().skip(j).step_by(k).copied().collect();
            MetapathGraph::from_parts(n, out_index.clone(), dst.clone(), w)
        })
        .collect()
}

/// Per-worker sparse accumulator and traversal buffers.
struct RowScratch {
    k: usize,
    acc: Vec<f64>,
    mark: Vec<bool>,
    touched: Vec<usize>,
    // level-by-level state
    cur: Vec<usize>,
    cur_w: Vec<f64>,
    level_vertices: Vec<usize>,
    level_alpha: Vec<f64>,
    level_offsets: Vec<usize>,
    beta: [Vec<f64>; 2],
    // depth-first state
    prefix: Vec<f64>,
    types: Vec<usize>,
    grad_row: Vec<f64>,
}

impl RowScratch {
    fn new(n: usize, k: usize) -> Self {
        Self {
            k,
            acc: vec![0.0; n * k],
            mark: vec![false; n],
            touched: Vec::new(),
            cur: Vec::new(),
            cur_w: Vec::new(),
            level_vertices: Vec::new(),
            level_alpha: Vec::new(),
            level_offsets: Vec::new(),
            beta: [Vec::new(), Vec::new()],
            prefix: Vec::new(),
            types: Vec::new(),
            grad_row: vec![0.0; n],
        }
    }

    /// Registers `y` in the current sparse row, zeroing its accumulator slot on
    /// first touch.
    #[inline]
    fn touch(&mut self, y: usize) {
        if !self.mark[y] {
            self.mark[y] = true;
            self.touched.push(y);
            self.acc[y * self.k..(y + 1) * self.k].fill(0.0);
        }
    }

    /// Clears marks and returns how many vertices were touched.
    fn clear_marks(&mut self) -> usize {
        for &y in &self.touched {
            self.mark[y] = false;
        }
        let count = self.touched.len();
        self.touched.clear();
        count
    }

    /// Writes the touched row, sorted by destination, and resets marks.
    fn drain_sorted(&mut self, dst: &mut [usize], w: &mut [f64]) {
        assert_eq!(
            self.touched.len(),
            dst.len(),
            "symbolic size disagrees with numeric row"
        );
        self.touched.sort_unstable();
        let k = self.k;
        for (i, &y) in self.touched.iter().enumerate() {
            dst[i] = y;
            w[i * k..(i + 1) * k].copy_from_slice(&self.acc[y * k..(y + 1) * k]);
        }
        self.clear_marks();
    }

    /// Frontier propagation from `source`; leaves the final level in `touched`
    /// with its weights in `acc`.
    fn level_forward(
        &mut self,
        g: &HeteroGraph,
        table: &ScoreTable,
        offsets: &[usize],
        len: usize,
        source: usize,
    ) {
        let k = self.k;
        self.cur.clear();
        self.cur.push(source);
        self.cur_w.clear();
        self.cur_w.resize(k, 1.0);
        for step in 0..len {
            if step > 0 {
                self.clear_marks();
            }
            for i in 0..self.cur.len() {
                let x = self.cur[i];
                for e in g.edge_range(x) {
                    let y = g.edge_dst()[e];
                    let t = g.edge_types()[e];
                    self.touch(y);
                    for (j, &off) in offsets.iter().enumerate() {
                        self.acc[y * k + j] += self.cur_w[i * k + j] * table.at(off + step, t);
                    }
                }
            }
            if step + 1 < len {
                self.cur.clear();
                self.cur.extend_from_slice(&self.touched);
                self.cur_w.clear();
                for &y in &self.touched {
                    self.cur_w.extend_from_slice(&self.acc[y * k..(y + 1) * k]);
                }
            }
        }
    }

    fn dfs_forward(
        &mut self,
        g: &HeteroGraph,
        table: &ScoreTable,
        offsets: &[usize],
        len: usize,
        x: usize,
        depth: usize,
    ) {
        let k = self.k;
        if depth == len {
            self.touch(x);
            for j in 0..k {
                self.acc[x * k + j] += self.prefix[depth * k + j];
            }
            return;
        }
        for e in g.edge_range(x) {
            let y = g.edge_dst()[e];
            let t = g.edge_types()[e];
            for (j, &off) in offsets.iter().enumerate() {
                self.prefix[(depth + 1) * k + j] =
                    self.prefix[depth * k + j] * table.at(off + depth, t);
            }
            self.dfs_forward(g, table, offsets, len, y, depth + 1);
        }
    }

    /// Forward frontiers with prefix sums `alpha`, then a reverse sweep with
    /// suffix sums `beta` seeded from `grad_row`. Each edge `x -> y` of type
    /// `t` at step `i` adds `alpha_i(x) * beta_(i+1)(y)` to `grad[offset+i][t]`.
    #[allow(clippy::too_many_arguments)]
    fn level_backward(
        &mut self,
        g: &HeteroGraph,
        table: &ScoreTable,
        offset: usize,
        len: usize,
        source: usize,
        grad: &mut [f64],
    ) {
        let num_types = table.num_types();
        let n = self.mark.len();
        self.level_vertices.clear();
        self.level_alpha.clear();
        self.level_offsets.clear();
        self.level_offsets.push(0);
        self.level_vertices.push(source);
        self.level_alpha.push(1.0);
        self.level_offsets.push(1);
        for step in 0..len {
            let lo = self.level_offsets[step];
            let hi = self.level_offsets[step + 1];
            for i in lo..hi {
                let x = self.level_vertices[i];
                let a = self.level_alpha[i];
                for e in g.edge_range(x) {
                    let y = g.edge_dst()[e];
                    self.touch(y);
                    self.acc[y] += a * table.at(offset + step, g.edge_types()[e]);
                }
            }
            for idx in 0..self.touched.len() {
                let y = self.touched[idx];
                self.level_vertices.push(y);
                self.level_alpha.push(self.acc[y]);
            }
            self.clear_marks();
            self.level_offsets.push(self.level_vertices.len());
        }

        for b in &mut self.beta {
            if b.len() != n {
                b.resize(n, 0.0);
            }
        }
        let [mut next, mut cur] = std::mem::take(&mut self.beta);
        let (lo, hi) = (self.level_offsets[len], self.level_offsets[len + 1]);
        for &y in &self.level_vertices[lo..hi] {
            next[y] = self.grad_row[y];
        }
        for step in (0..len).rev() {
            let lo = self.level_offsets[step];
            let hi = self.level_offsets[step + 1];
            let row = (offset + step) * num_types;
            for i in lo..hi {
                let x = self.level_vertices[i];
                let a = self.level_alpha[i];
                let mut b = 0.0;
                for e in g.edge_range(x) {
                    let y = g.edge_dst()[e];
                    let t = g.edge_types()[e];
                    let by = next[y];
                    grad[row + t] += a * by;
                    b += table.at(offset + step, t) * by;
                }
                cur[x] = b;
            }
            std::mem::swap(&mut next, &mut cur);
        }
        self.beta = [next, cur];
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs_backward(
        &mut self,
        g: &HeteroGraph,
        table: &ScoreTable,
        offset: usize,
        len: usize,
        x: usize,
        depth: usize,
        grad: &mut [f64],
    ) {
        if depth == len {
            let gx = self.grad_row[x];
            if gx == 0.0 {
                return;
            }
            let num_types = table.num_types();
            let mut suffix = 1.0;
            for i in (0..len).rev() {
                let t = self.types[i];
                grad[(offset + i) * num_types + t] += gx * self.prefix[i] * suffix;
                suffix *= table.at(offset + i, t);
            }
            return;
        }
        for e in g.edge_range(x) {
            let y = g.edge_dst()[e];
            let t = g.edge_types()[e];
            self.types[depth] = t;
            self.prefix[depth + 1] = self.prefix[depth] * table.at(offset + depth, t);
            self.dfs_backward(g, table, offset, len, y, depth + 1, grad);
        }
    }
}

//! Random-walk metapath sampling.
//!
//! Each vertex launches a fixed number of walks. At step `j` the next edge is
//! drawn with probability proportional to `s[j][type(e)]` among the current
//! vertex's out-edges, by acceptance-rejection: propose an out-edge uniformly
//! and accept it with probability `s[j][type] / max_t s[j][t]`. After
//! [`MAX_REJECTIONS`] consecutive rejections the step falls back to an exact
//! inverse-CDF draw over the same weights, which leaves the distribution
//! unchanged.
//!
//! Every `(seed, vertex, walk index)` triple owns its own RNG stream, so the
//! sampled set does not depend on scheduling or the number of threads.
//! Walks are stored so the backward pass can replay them.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::HeteroGraph;
use crate::metapath_graph::MetapathGraph;
use crate::scoring::ScoreTable;

pub const MAX_REJECTIONS: usize = 64;

const GRAD_BLOCK: usize = 256;

/// Stored walks, grouped by source vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkSet {
    length: usize,
    seed: u64,
    num_vertices: usize,
    walk_index: Vec<usize>,
    vertices: Vec<u32>,
    types: Vec<u32>,
}

/// One stored walk: `length + 1` vertices and the `length` edge types taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Walk<'a> {
    pub vertices: &'a [u32],
    pub types: &'a [u32],
}

impl Walk<'_> {
    pub fn source(&self) -> usize {
        self.vertices[0] as usize
    }

    pub fn end(&self) -> usize {
        *self.vertices.last().unwrap() as usize
    }

    pub fn types_usize(&self) -> Vec<usize> {
        self.types.iter().map(|&t| t as usize).collect()
    }
}

impl WalkSet {
    pub fn empty(num_vertices: usize, length: usize) -> Self {
        Self {
            length,
            seed: 0,
            num_vertices,
            walk_index: vec![0; num_vertices + 1],
            vertices: Vec::new(),
            types: Vec::new(),
        }
    }

    /// Builds a walk set from explicit `(vertices, types)` paths, checking
    /// each step against `g`. Paths are grouped by source, keeping their
    /// relative order.
    pub fn from_paths<I>(g: &HeteroGraph, length: usize, paths: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, Vec<usize>)>,
    {
        let n = g.num_vertices();
        let mut paths: Vec<(Vec<usize>, Vec<usize>)> = paths.into_iter().collect();
        for (i, (vs, ts)) in paths.iter().enumerate() {
            if vs.len() != length + 1 || ts.len() != length {
                return Err(Error::WalkLengthMismatch {
                    walks: ts.len(),
                    expected: length,
                });
            }
            if vs[0] >= n {
                return Err(Error::VertexOutOfRange {
                    edge_index: i,
                    field: "src",
                    id: vs[0],
                    num_vertices: n,
                });
            }
            for step in 0..length {
                if g.find_edge(vs[step], vs[step + 1], ts[step]).is_none() {
                    return Err(Error::StaleWalk {
                        walk: i,
                        step,
                        src: vs[step],
                        dst: vs[step + 1],
                        edge_type: ts[step],
                    });
                }
            }
        }
        paths.sort_by_key(|(vs, _)| vs[0]);
        let mut walk_index = vec![0usize; n + 1];
        let mut vertices = Vec::with_capacity(paths.len() * (length + 1));
        let mut types = Vec::with_capacity(paths.len() * length);
        for (vs, ts) in &paths {
            walk_index[vs[0] + 1] += 1;
            vertices.extend(vs.iter().map(|&v| v as u32));
            types.extend(ts.iter().map(|&t| t as u32));
        }
        for v in 0..n {
            walk_index[v + 1] += walk_index[v];
        }
        Ok(Self {
            length,
            seed: 0,
            num_vertices: n,
            walk_index,
            vertices,
            types,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    /// Total number of stored walks.
    pub fn len(&self) -> usize {
        self.walk_index[self.num_vertices]
    }

    pub fn is_empty(&self) -> bool {
        self.walk_index[self.num_vertices] == 0
    }

    pub fn walk(&self, i: usize) -> Walk<'_> {
        let l = self.length;
        Walk {
            vertices: &self.vertices[i * (l + 1)..(i + 1) * (l + 1)],
            types: &self.types[i * l..(i + 1) * l],
        }
    }

    /// Walks launched from `v`.
    pub fn walks_from(&self, v: usize) -> impl Iterator<Item = Walk<'_>> + '_ {
        (self.walk_index[v]..self.walk_index[v + 1]).map(move |i| self.walk(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = Walk<'_>> + '_ {
        (0..self.walk_index[self.num_vertices]).map(move |i| self.walk(i))
    }

    /// Checks that every step of every walk is an edge of `g`.
    pub fn validate(&self, g: &HeteroGraph) -> Result<()> {
        if g.num_vertices() != self.num_vertices {
            return Err(Error::VertexCountMismatch {
                left: g.num_vertices(),
                right: self.num_vertices,
            });
        }
        let bad = (0..self.walk_index[self.num_vertices])
            .into_par_iter()
            .find_first(|&i| {
                let w = self.walk(i);
                (0..self.length).any(|s| {
                    g.find_edge(
                        w.vertices[s] as usize,
                        w.vertices[s + 1] as usize,
                        w.types[s] as usize,
                    )
                    .is_none()
                })
            });
        match bad {
            None => Ok(()),
            Some(i) => {
                let w = self.walk(i);
                let step = (0..self.length)
                    .find(|&s| {
                        g.find_edge(
                            w.vertices[s] as usize,
                            w.vertices[s + 1] as usize,
                            w.types[s] as usize,
                        )
                        .is_none()
                    })
                    .unwrap();
                Err(Error::StaleWalk {
                    walk: i,
                    step,
                    src: w.vertices[step] as usize,
                    dst: w.vertices[step + 1] as usize,
                    edge_type: w.types[step] as usize,
                })
            }
        }
    }
}

/// Mixes a run seed with a vertex and walk index into a stream seed.
fn stream_seed(seed: u64, vertex: usize, walk: usize) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    splitmix(splitmix(splitmix(seed) ^ vertex as u64) ^ walk as u64)
}

/// Draws the next edge out of `x` at 0-based step `pos`.
#[inline]
fn next_edge<R: Rng>(
    g: &HeteroGraph,
    table: &ScoreTable,
    row_max: f64,
    pos: usize,
    x: usize,
    rng: &mut R,
) -> usize {
    let range = g.edge_range(x);
    let types = g.edge_types();
    let deg = range.len();
    if row_max <= 0.0 {
        return range.start + rng.random_range(0..deg);
    }
    for _ in 0..MAX_REJECTIONS {
        let e = range.start + rng.random_range(0..deg);
        if rng.random::<f64>() * row_max < table.at(pos, types[e]) {
            return e;
        }
    }
    let total: f64 = range.clone().map(|e| table.at(pos, types[e])).sum();
    if total <= 0.0 {
        return range.start + rng.random_range(0..deg);
    }
    let mut r = rng.random::<f64>() * total;
    for e in range.clone() {
        r -= table.at(pos, types[e]);
        if r < 0.0 {
            return e;
        }
    }
    range.end - 1
}

/// Samples `num_walks` walks of `l` edges from every vertex of a self-edge
/// augmented graph.
pub fn sample_walks(
    g: &HeteroGraph,
    table: &ScoreTable,
    l: usize,
    num_walks: usize,
    seed: u64,
) -> Result<WalkSet> {
    if !g.is_augmented() {
        return Err(Error::NotAugmented);
    }
    if l == 0 {
        return Err(Error::InvalidLength { got: 0, min: 1 });
    }
    table.check_span(1, l)?;
    table.check_types(g.num_edge_types())?;
    let n = g.num_vertices();
    if n > u32::MAX as usize || g.num_edge_types() > u32::MAX as usize {
        return Err(Error::Config(
            "walk storage is limited to 2^32 vertices and types".into(),
        ));
    }
    let row_max = table.row_max();
    let mut vertices = vec![0u32; n * num_walks * (l + 1)];
    let mut types = vec![0u32; n * num_walks * l];
    if num_walks > 0 {
        vertices
            .par_chunks_mut(num_walks * (l + 1))
            .zip(types.par_chunks_mut(num_walks * l))
            .enumerate()
            .with_min_len(16)
            .for_each(|(v, (vs, ts))| {
                for w in 0..num_walks {
                    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, v, w));
                    let vs = &mut vs[w * (l + 1)..(w + 1) * (l + 1)];
                    let ts = &mut ts[w * l..(w + 1) * l];
                    let mut x = v;
                    vs[0] = v as u32;
                    for step in 0..l {
                        let e = next_edge(g, table, row_max[step], step, x, &mut rng);
                        x = g.edge_dst()[e];
                        vs[step + 1] = x as u32;
                        ts[step] = g.edge_types()[e] as u32;
                    }
                }
            });
    }
    let walk_index = (0..=n).map(|v| v * num_walks).collect();
    Ok(WalkSet {
        length: l,
        seed,
        num_vertices: n,
        walk_index,
        vertices,
        types,
    })
}

#[inline]
fn replay_score(table: &ScoreTable, types: &[u32]) -> f64 {
    let mut score = 1.0;
    for (i, &t) in types.iter().enumerate() {
        score *= table.at(i, t as usize);
    }
    score
}

fn check_walks(g: Option<&HeteroGraph>, table: &ScoreTable, walks: &WalkSet) -> Result<()> {
    if walks.length == 0 {
        return Err(Error::InvalidLength { got: 0, min: 1 });
    }
    table.check_span(1, walks.length)?;
    if let Some(&max_type) = walks.types.iter().max() {
        if max_type as usize >= table.num_types() {
            return Err(Error::UnknownScoreType {
                edge_type: max_type as usize,
                num_types: table.num_types(),
            });
        }
    }
    if let Some(g) = g {
        walks.validate(g)?;
    }
    Ok(())
}

/// Accumulates the score of every stored walk into the edge between its
/// endpoints. Repeated walks contribute repeatedly.
pub fn generate_sampled(
    g: &HeteroGraph,
    table: &ScoreTable,
    walks: &WalkSet,
) -> Result<MetapathGraph> {
    check_walks(Some(g), table, walks)?;
    let n = walks.num_vertices;
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .with_min_len(64)
        .map(|v| {
            let mut row: Vec<(usize, f64)> = walks
                .walks_from(v)
                .map(|w| (w.end(), replay_score(table, w.types)))
                .collect();
            row.sort_by_key(|&(d, _)| d);
            row.dedup_by(|next, kept| {
                if next.0 == kept.0 {
                    kept.1 += next.1;
                    true
                } else {
                    false
                }
            });
            row
        })
        .collect();
    let mut out_index = Vec::with_capacity(n + 1);
    out_index.push(0);
    for r in &rows {
        out_index.push(out_index.last().unwrap() + r.len());
    }
    let nnz = out_index[n];
    let mut dst = Vec::with_capacity(nnz);
    let mut weight = Vec::with_capacity(nnz);
    for r in rows {
        for (d, w) in r {
            dst.push(d);
            weight.push(w);
        }
    }
    Ok(MetapathGraph::from_parts(n, out_index, dst, weight))
}

/// Gradient on the score table of `sum grad_mg * MG` for the sampled graph,
/// with the walks held fixed.
pub fn backward_sampled(
    table: &ScoreTable,
    walks: &WalkSet,
    grad_mg: &MetapathGraph,
) -> Result<Array2<f64>> {
    check_walks(None, table, walks)?;
    let n = walks.num_vertices;
    if grad_mg.num_vertices() != n {
        return Err(Error::VertexCountMismatch {
            left: n,
            right: grad_mg.num_vertices(),
        });
    }
    let shape = table.scores().dim();
    let num_types = shape.1;
    let l = walks.length;
    let blocks = n.div_ceil(GRAD_BLOCK);
    let partials: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut local = vec![0.0; shape.0 * shape.1];
            let mut prefix = vec![1.0; l + 1];
            for v in b * GRAD_BLOCK..((b + 1) * GRAD_BLOCK).min(n) {
                if grad_mg.row(v).0.is_empty() {
                    continue;
                }
                for w in walks.walks_from(v) {
                    let gw = match grad_mg.weight(v, w.end()) {
                        Some(x) if x != 0.0 => x,
                        _ => continue,
                    };
                    for i in 0..l {
                        prefix[i + 1] = prefix[i] * table.at(i, w.types[i] as usize);
                    }
                    let mut suffix = 1.0;
                    for i in (0..l).rev() {
                        let t = w.types[i] as usize;
                        local[i * num_types + t] += gw * prefix[i] * suffix;
                        suffix *= table.at(i, t);
                    }
                }
            }
            local
        })
        .collect();
    let mut total = vec![0.0; shape.0 * shape.1];
    for p in partials {
        for (t, x) in total.iter_mut().zip(p) {
            *t += x;
        }
    }
    Ok(Array2::from_shape_vec(shape, total).expect("gradient buffer matches table shape"))
}

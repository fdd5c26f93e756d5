#![allow(dead_code)]

use std::collections::BTreeMap;

use metapath_core::dataset::DatasetBundle;
use metapath_core::gnn::ModelState;
use metapath_core::{
    sample_walks, Gtn, HeteroGraph, MetapathGraph, ScoreParams, ScoreTable, SplitMasks, WalkSet,
};
use ndarray::Array2;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub type EdgeMap = BTreeMap<(usize, usize), f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fig1_graph() -> HeteroGraph {
    // A=0 B=1 C=2 D=3 E=4; type 0 is red, type 1 is blue
    HeteroGraph::build(
        [(0, 1, 0), (1, 2, 1), (0, 3, 1), (3, 2, 0), (3, 4, 1)],
        5,
        2,
    )
    .unwrap()
}

pub fn fig1_table() -> ScoreTable {
    ScoreTable::from_scores(ndarray::array![[2.0, 1.0], [3.0, 2.0]]).unwrap()
}

/// Each ordered pair gets an edge with probability `density`, with a
/// uniform type. Parallel edges of distinct types appear with small chance.
pub fn random_graph(rng: &mut impl Rng, n: usize, types: usize, density: f64) -> HeteroGraph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if rng.random::<f64>() < density {
                edges.push((u, v, rng.random_range(0..types)));
                if rng.random::<f64>() < 0.05 {
                    edges.push((u, v, rng.random_range(0..types)));
                }
            }
        }
    }
    HeteroGraph::build(edges, n, types).unwrap()
}

pub fn random_table(rng: &mut impl Rng, positions: usize, types: usize) -> ScoreTable {
    let raw = Array2::from_shape_simple_fn((positions, types), || rng.random_range(-1.0..1.0));
    ScoreParams::new(raw).unwrap().materialize_softmax()
}

/// Every length-`l` typed path, enumerated edge by edge from the raw edge
/// list, with its score summed into the endpoint pair.
pub fn brute_force(g: &HeteroGraph, table: &ScoreTable, l: usize) -> EdgeMap {
    let edges: Vec<_> = g.edges().collect();
    let mut adj = vec![Vec::new(); g.num_vertices()];
    for e in &edges {
        adj[e.src].push((e.dst, e.edge_type));
    }
    #[allow(clippy::too_many_arguments)]
    fn walk(
        adj: &[Vec<(usize, usize)>],
        table: &ScoreTable,
        l: usize,
        src: usize,
        at: usize,
        depth: usize,
        score: f64,
        out: &mut EdgeMap,
    ) {
        if depth == l {
            *out.entry((src, at)).or_insert(0.0) += score;
            return;
        }
        for &(next, t) in &adj[at] {
            let s = score * table.scores()[[depth, t]];
            walk(adj, table, l, src, next, depth + 1, s, out);
        }
    }
    let mut out = EdgeMap::new();
    for src in 0..g.num_vertices() {
        walk(&adj, table, l, src, src, 0, 1.0, &mut out);
    }
    out
}

/// Number of distinct endpoints per source over all length-`l` paths.
pub fn brute_force_reach(g: &HeteroGraph, l: usize) -> Vec<usize> {
    let n = g.num_vertices();
    (0..n)
        .map(|s| {
            let mut cur = vec![false; n];
            cur[s] = true;
            for _ in 0..l {
                let mut next = vec![false; n];
                for e in g.edges() {
                    if cur[e.src] {
                        next[e.dst] = true;
                    }
                }
                cur = next;
            }
            cur.iter().filter(|&&b| b).count()
        })
        .collect()
}

pub fn to_map(mg: &MetapathGraph) -> EdgeMap {
    mg.edges().map(|(s, d, w)| ((s, d), w)).collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// `None` when edge sets match and every weight is within `tol` relative;
/// otherwise a description of the first difference.
pub fn compare_maps(got: &EdgeMap, want: &EdgeMap, tol: f64) -> Option<String> {
    if got.len() != want.len() || got.keys().ne(want.keys()) {
        let extra: Vec<_> = got
            .keys()
            .filter(|k| !want.contains_key(k))
            .take(3)
            .collect();
        let missing: Vec<_> = want
            .keys()
            .filter(|k| !got.contains_key(k))
            .take(3)
            .collect();
        return Some(format!(
            "edge sets differ ({} vs {}): extra {extra:?}, missing {missing:?}",
            got.len(),
            want.len()
        ));
    }
    for (k, &w) in want {
        let g = got[k];
        if rel_err(g, w) > tol {
            return Some(format!("edge {k:?}: {g} vs {w}"));
        }
    }
    None
}

/// A small classification problem on a random augmented graph.
pub struct GradFixture {
    pub graph: HeteroGraph,
    pub features: Array2<f64>,
    pub labels: Vec<Option<usize>>,
    pub mask: Vec<usize>,
}

pub fn grad_fixture(seed: u64, n: usize, types: usize) -> GradFixture {
    let mut r = rng(seed);
    let graph = random_graph(&mut r, n, types, 0.2)
        .add_self_edges()
        .unwrap();
    let features = Array2::from_shape_simple_fn((n, 3), || r.random_range(-1.0..1.0));
    let labels = (0..n).map(|_| Some(r.random_range(0..3))).collect();
    let mask = (0..n).filter(|v| v % 3 != 2).collect();
    GradFixture {
        graph,
        features,
        labels,
        mask,
    }
}

/// Worst per-entry mismatch between the analytic gradient on the raw score
/// parameters and central differences with step `h`. Entries where both
/// sides are below `floor` are compared absolutely against `floor`.
pub fn score_gradcheck(
    gtn: &Gtn<'_>,
    state: &ModelState,
    walks: Option<&WalkSet>,
    labels: &[Option<usize>],
    mask: &[usize],
    h: f64,
    floor: f64,
) -> f64 {
    let out = gtn.forward_backward(state, walks, labels, mask).unwrap();
    let analytic = out.score_raw.expect("scores are learned");
    let mut worst: f64 = 0.0;
    let mut probe = state.clone();
    for idx in ndarray::indices(analytic.dim()) {
        let base = state.score_params.as_ref().unwrap().raw[idx];
        probe.score_params.as_mut().unwrap().raw[idx] = base + h;
        let up = gtn.loss(&probe, walks, labels, mask).unwrap();
        probe.score_params.as_mut().unwrap().raw[idx] = base - h;
        let down = gtn.loss(&probe, walks, labels, mask).unwrap();
        probe.score_params.as_mut().unwrap().raw[idx] = base;
        let numeric = (up - down) / (2.0 * h);
        let a = analytic[idx];
        let err = if a.abs().max(numeric.abs()) < floor {
            (a - numeric).abs() / floor
        } else {
            rel_err(a, numeric)
        };
        worst = worst.max(err);
    }
    worst
}

/// Two classes, two edge types. Type-0 edges stay inside a class and type-1
/// edges are uniform noise; features carry a weak, noisy class signal.
pub fn planted_dataset(seed: u64, n: usize) -> DatasetBundle {
    let mut r = rng(seed);
    let classes = 2;
    let dim = 8;
    let labels: Vec<usize> = (0..n).map(|v| v % classes).collect();
    let by_class: Vec<Vec<usize>> = (0..classes)
        .map(|c| (0..n).filter(|&v| labels[v] == c).collect())
        .collect();
    let mut edges = Vec::new();
    for v in 0..n {
        let same = &by_class[labels[v]];
        for _ in 0..4 {
            edges.push((v, *same.choose(&mut r).unwrap(), 0));
        }
        for _ in 0..4 {
            edges.push((v, r.random_range(0..n), 1));
        }
    }
    let graph = HeteroGraph::build(edges, n, 2).unwrap();
    let features = Array2::from_shape_fn((n, dim), |(v, j)| {
        let signal = if j % classes == labels[v] { 0.6 } else { 0.0 };
        signal + r.sample::<f64, _>(StandardNormal)
    });
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut r);
    let n_train = n * 3 / 10;
    let n_val = n / 10;
    let masks = SplitMasks {
        train: order[..n_train].to_vec(),
        val: order[n_train..n_train + n_val].to_vec(),
        test: order[n_train + n_val..].to_vec(),
    };
    DatasetBundle {
        graph,
        features,
        labels: labels.into_iter().map(Some).collect(),
        masks,
        num_classes: classes,
        vertex_names: None,
        edge_type_names: None,
        score_table: None,
    }
}

/// Vertex 0 has three out-edges after augmentation: type 0, type 1 and its
/// self-edge (type 2).
pub fn three_edge_fixture() -> (HeteroGraph, ScoreTable) {
    let g = HeteroGraph::build([(0, 1, 0), (0, 2, 1)], 3, 2)
        .unwrap()
        .add_self_edges()
        .unwrap();
    let table = ScoreTable::from_scores(ndarray::array![[0.55, 0.15, 0.30]]).unwrap();
    (g, table)
}

pub fn first_step_counts(num_walks: usize, seed: u64) -> [u64; 3] {
    let (g, table) = three_edge_fixture();
    let walks = sample_walks(&g, &table, 1, num_walks, seed).unwrap();
    let mut counts = [0u64; 3];
    for w in walks.walks_from(0) {
        counts[w.types[0] as usize] += 1;
    }
    counts
}

pub fn chi_squared_p(counts: &[u64], probs: &[f64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let stat: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * total as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64)
        .unwrap()
        .cdf(stat)
}

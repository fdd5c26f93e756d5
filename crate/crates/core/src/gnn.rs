//! Weighted GCN aggregation, the dense head, and their backward passes.
//!
//! Aggregation over a metapath graph normalizes each edge by the weighted
//! out-degree of its source: `agg[v] = sum_(u->v) (w_uv / deg_w(u)) * x[u]`.
//! A source with zero out-weight contributes nothing.

use ndarray::{Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metapath_graph::{split_rows_mut, MetapathGraph, Transpose};
use crate::scoring::ScoreParams;

pub type FeatureMatrix = Array2<f64>;

/// Out-degree normalized aggregation over a metapath graph.
pub struct Aggregator<'a> {
    mg: &'a MetapathGraph,
    out_weight: Vec<f64>,
    incoming: Transpose,
}

impl<'a> Aggregator<'a> {
    pub fn new(mg: &'a MetapathGraph) -> Self {
        let out_weight = (0..mg.num_vertices())
            .map(|u| mg.row(u).1.iter().sum())
            .collect();
        Self {
            mg,
            out_weight,
            incoming: mg.transpose(),
        }
    }

    #[inline]
    fn coef(&self, u: usize, e: usize) -> f64 {
        let d = self.out_weight[u];
        if d == 0.0 {
            0.0
        } else {
            self.mg.edge_weights()[e] / d
        }
    }

    fn check_rows(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.nrows() != self.mg.num_vertices() {
            return Err(Error::VertexCountMismatch {
                left: self.mg.num_vertices(),
                right: x.nrows(),
            });
        }
        Ok(())
    }

    /// `out[v] = sum_(u->v) coef(u,v) * x[u]`.
    pub fn forward(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_rows(x)?;
        let x = x.as_standard_layout();
        let xs = x.as_slice().unwrap();
        let h = x.ncols();
        let n = x.nrows();
        let mut out = vec![0.0; n * h];
        if h > 0 {
            out.par_chunks_mut(h)
                .enumerate()
                .with_min_len(64)
                .for_each(|(v, o)| {
                    for i in self.incoming.col_range(v) {
                        let u = self.incoming.in_src[i];
                        let c = self.coef(u, self.incoming.in_edge[i]);
                        if c == 0.0 {
                            continue;
                        }
                        for (o, &xu) in o.iter_mut().zip(&xs[u * h..(u + 1) * h]) {
                            *o += c * xu;
                        }
                    }
                });
        }
        Ok(Array2::from_shape_vec((n, h), out).unwrap())
    }

    /// Adjoint of [`forward`](Self::forward): `dx[u] = sum_(u->v) coef(u,v) * dout[v]`.
    pub fn backward_input(&self, dout: &ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_rows(dout)?;
        let dout = dout.as_standard_layout();
        let ds = dout.as_slice().unwrap();
        let h = dout.ncols();
        let n = dout.nrows();
        let mut dx = vec![0.0; n * h];
        if h > 0 {
            dx.par_chunks_mut(h)
                .enumerate()
                .with_min_len(64)
                .for_each(|(u, o)| {
                    let dst = self.mg.row(u).0;
                    for (e, &v) in self.mg.row_range(u).zip(dst) {
                        let c = self.coef(u, e);
                        for (o, &g) in o.iter_mut().zip(&ds[v * h..(v + 1) * h]) {
                            *o += c * g;
                        }
                    }
                });
        }
        Ok(Array2::from_shape_vec((n, h), dx).unwrap())
    }

    /// Gradient on every metapath edge weight, aligned with edge storage.
    /// With `q_uv = dout[v] . x[u]` and `D_u` the out-weight of `u`:
    /// `dL/dw_uv = q_uv / D_u - sum_k q_uk * w_uk / D_u^2`.
    pub fn backward_weights(
        &self,
        x: &ArrayView2<f64>,
        dout: &ArrayView2<f64>,
    ) -> Result<Vec<f64>> {
        self.check_rows(x)?;
        self.check_rows(dout)?;
        if x.ncols() != dout.ncols() {
            return Err(Error::ShapeMismatch {
                what: "aggregation gradient",
                expected: x.dim(),
                got: dout.dim(),
            });
        }
        let mg = self.mg;
        let x = x.as_standard_layout();
        let dout = dout.as_standard_layout();
        let xs = x.as_slice().unwrap();
        let ds = dout.as_slice().unwrap();
        let h = x.ncols();
        let mut grad = vec![0.0; mg.num_edges()];
        split_rows_mut(&mut grad, mg.out_index(), 1)
            .into_par_iter()
            .enumerate()
            .with_min_len(64)
            .for_each(|(u, out)| {
                let d = self.out_weight[u];
                if d == 0.0 || out.is_empty() {
                    return;
                }
                let (dst, w) = mg.row(u);
                let xu = &xs[u * h..(u + 1) * h];
                let mut weighted = 0.0;
                for (o, &v) in out.iter_mut().zip(dst) {
                    *o = ds[v * h..(v + 1) * h]
                        .iter()
                        .zip(xu)
                        .map(|(a, b)| a * b)
                        .sum();
                }
                for (q, &wk) in out.iter().zip(w) {
                    weighted += q * wk;
                }
                let shift = weighted / d;
                for o in out.iter_mut() {
                    *o = (*o - shift) / d;
                }
            });
        Ok(grad)
    }
}

fn relu(z: &Array2<f64>) -> Array2<f64> {
    z.mapv(|x| x.max(0.0))
}

/// Zeroes `grad` where the pre-activation was not positive.
fn relu_backward(grad: &mut Array2<f64>, pre: &Array2<f64>) {
    Zip::from(grad).and(pre).for_each(|g, &z| {
        if z <= 0.0 {
            *g = 0.0;
        }
    });
}

fn check_matmul(what: &'static str, left: (usize, usize), right: (usize, usize)) -> Result<()> {
    if left.1 != right.0 {
        return Err(Error::ShapeMismatch {
            what,
            expected: (left.1, right.1),
            got: right,
        });
    }
    Ok(())
}

/// One weighted GCN layer: `ReLU(agg(x) * w)`.
pub fn gcn_forward(mg: &MetapathGraph, x: &FeatureMatrix, w: &Array2<f64>) -> Result<Array2<f64>> {
    check_matmul("gcn weights", x.dim(), w.dim())?;
    let agg = Aggregator::new(mg).forward(&x.view())?;
    Ok(relu(&agg.dot(w)))
}

/// Glorot-uniform `rows x cols` matrix.
pub fn glorot<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let limit = (6.0 / (rows + cols).max(1) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..=limit))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    /// GCN layer over the generated metapath graph, then two dense layers.
    Gtn,
    /// Two GCN layers over the input graph with unit weights.
    GcnBaseline,
}

/// Every learnable tensor. No bias terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    /// `None` when scores are not learned (baseline, or an injected table).
    pub score_params: Option<ScoreParams>,
    /// `d x h`
    pub w_gcn: Array2<f64>,
    /// `h x h` first dense layer; absent for the baseline.
    pub w_hidden: Option<Array2<f64>>,
    /// `h x c`: second dense layer, or the baseline's second GCN layer.
    pub w_out: Array2<f64>,
}

impl ModelState {
    pub fn init<R: Rng + ?Sized>(
        arch: Architecture,
        score_shape: Option<(usize, usize)>,
        in_dim: usize,
        hidden: usize,
        classes: usize,
        rng: &mut R,
    ) -> Self {
        let score_params = score_shape.map(|(l, t)| ScoreParams::init_uniform(l, t, rng));
        let w_gcn = glorot(in_dim, hidden, rng);
        let w_hidden = match arch {
            Architecture::Gtn => Some(glorot(hidden, hidden, rng)),
            Architecture::GcnBaseline => None,
        };
        let w_out = glorot(hidden, classes, rng);
        Self {
            score_params,
            w_gcn,
            w_hidden,
            w_out,
        }
    }

    pub fn architecture(&self) -> Architecture {
        if self.w_hidden.is_some() {
            Architecture::Gtn
        } else {
            Architecture::GcnBaseline
        }
    }

    /// Mutable views of the learnable tensors in a fixed order: score params
    /// (if any), `w_gcn`, `w_hidden` (if any), `w_out`.
    pub fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut out = Vec::with_capacity(4);
        if let Some(p) = self.score_params.as_mut() {
            out.push(&mut p.raw);
        }
        out.push(&mut self.w_gcn);
        if let Some(w) = self.w_hidden.as_mut() {
            out.push(w);
        }
        out.push(&mut self.w_out);
        out
    }

    pub fn tensor_shapes(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(4);
        if let Some(p) = &self.score_params {
            out.push(p.raw.dim());
        }
        out.push(self.w_gcn.dim());
        if let Some(w) = &self.w_hidden {
            out.push(w.dim());
        }
        out.push(self.w_out.dim());
        out
    }
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `x * w_gcn`
    pub projected: Array2<f64>,
    /// aggregated GCN pre-activation
    pub gcn_pre: Array2<f64>,
    pub gcn_out: Array2<f64>,
    /// dense layer pre-activation (GTN) or `gcn_out * w_out` (baseline)
    pub second_pre: Array2<f64>,
    pub second_out: Option<Array2<f64>>,
    pub logits: Array2<f64>,
}

/// Layer-weight gradients plus the gradient on every metapath edge weight.
#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub w_gcn: Array2<f64>,
    pub w_hidden: Option<Array2<f64>>,
    pub w_out: Array2<f64>,
    /// Aligned with the metapath graph's edge storage; empty for the baseline.
    pub mg_edges: Vec<f64>,
}

fn check_state(x: &FeatureMatrix, state: &ModelState) -> Result<()> {
    check_matmul("w_gcn", x.dim(), state.w_gcn.dim())?;
    let hidden = state.w_gcn.ncols();
    if let Some(w) = &state.w_hidden {
        if w.dim() != (hidden, hidden) {
            return Err(Error::ShapeMismatch {
                what: "w_hidden",
                expected: (hidden, hidden),
                got: w.dim(),
            });
        }
    }
    if state.w_out.nrows() != hidden {
        return Err(Error::ShapeMismatch {
            what: "w_out",
            expected: (hidden, state.w_out.ncols()),
            got: state.w_out.dim(),
        });
    }
    Ok(())
}

/// Logits for every vertex. The softmax is applied inside the loss.
pub fn model_forward(
    mg: &MetapathGraph,
    x: &FeatureMatrix,
    state: &ModelState,
) -> Result<ForwardCache> {
    check_state(x, state)?;
    let agg = Aggregator::new(mg);
    let projected = x.dot(&state.w_gcn);
    let gcn_pre = agg.forward(&projected.view())?;
    let gcn_out = relu(&gcn_pre);
    match &state.w_hidden {
        Some(w_hidden) => {
            let second_pre = gcn_out.dot(w_hidden);
            let second_out = relu(&second_pre);
            let logits = second_out.dot(&state.w_out);
            Ok(ForwardCache {
                projected,
                gcn_pre,
                gcn_out,
                second_pre,
                second_out: Some(second_out),
                logits,
            })
        }
        None => {
            let second_pre = gcn_out.dot(&state.w_out);
            let logits = agg.forward(&second_pre.view())?;
            Ok(ForwardCache {
                projected,
                gcn_pre,
                gcn_out,
                second_pre,
                second_out: None,
                logits,
            })
        }
    }
}

pub fn model_backward(
    mg: &MetapathGraph,
    x: &FeatureMatrix,
    state: &ModelState,
    cache: &ForwardCache,
    dlogits: &Array2<f64>,
) -> Result<LayerGrads> {
    check_state(x, state)?;
    if dlogits.dim() != cache.logits.dim() {
        return Err(Error::ShapeMismatch {
            what: "logit gradient",
            expected: cache.logits.dim(),
            got: dlogits.dim(),
        });
    }
    let agg = Aggregator::new(mg);
    match (&state.w_hidden, &cache.second_out) {
        (Some(w_hidden), Some(second_out)) => {
            let w_out = second_out.t().dot(dlogits);
            let mut d_second = dlogits.dot(&state.w_out.t());
            relu_backward(&mut d_second, &cache.second_pre);
            let w_hidden_grad = cache.gcn_out.t().dot(&d_second);
            let mut d_gcn = d_second.dot(&w_hidden.t());
            relu_backward(&mut d_gcn, &cache.gcn_pre);
            let d_projected = agg.backward_input(&d_gcn.view())?;
            let w_gcn = x.t().dot(&d_projected);
            let mg_edges = agg.backward_weights(&cache.projected.view(), &d_gcn.view())?;
            Ok(LayerGrads {
                w_gcn,
                w_hidden: Some(w_hidden_grad),
                w_out,
                mg_edges,
            })
        }
        (None, None) => {
            let d_second = agg.backward_input(&dlogits.view())?;
            let w_out = cache.gcn_out.t().dot(&d_second);
            let mut d_gcn = d_second.dot(&state.w_out.t());
            relu_backward(&mut d_gcn, &cache.gcn_pre);
            let d_projected = agg.backward_input(&d_gcn.view())?;
            let w_gcn = x.t().dot(&d_projected);
            Ok(LayerGrads {
                w_gcn,
                w_hidden: None,
                w_out,
                mg_edges: Vec::new(),
            })
        }
        _ => Err(Error::Config(
            "forward cache does not match model architecture".into(),
        )),
    }
}

/// Row-wise softmax.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut p = logits.clone();
    for mut row in p.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        row.mapv_inplace(|x| (x - max).exp());
        let s = row.sum();
        row.mapv_inplace(|x| x / s);
    }
    p
}

/// Mean softmax cross-entropy over `mask`, and its gradient on the logits
/// (`(softmax - onehot) / |mask|` on mask rows, zero elsewhere).
pub fn cross_entropy(
    logits: &Array2<f64>,
    labels: &[Option<usize>],
    mask: &[usize],
) -> Result<(f64, Array2<f64>)> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let c = logits.ncols();
    let scale = 1.0 / mask.len() as f64;
    let mut grad = Array2::zeros(logits.dim());
    let mut loss = 0.0;
    for &v in mask {
        let y = labels
            .get(v)
            .copied()
            .flatten()
            .filter(|&y| y < c)
            .ok_or(Error::MissingLabel { vertex: v })?;
        let row = logits.row(v);
        let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let sum: f64 = row.iter().map(|&x| (x - max).exp()).sum();
        let log_z = max + sum.ln();
        loss += log_z - row[y];
        let mut g = grad.row_mut(v);
        for (j, (gj, &x)) in g.iter_mut().zip(row.iter()).enumerate() {
            let p = (x - log_z).exp();
            *gj = scale * (p - if j == y { 1.0 } else { 0.0 });
        }
    }
    Ok((loss * scale, grad))
}

/// Fraction of `mask` whose argmax logit equals the label. Ties go to the
/// lowest class index.
pub fn accuracy(logits: &Array2<f64>, labels: &[Option<usize>], mask: &[usize]) -> f64 {
    if mask.is_empty() {
        return 0.0;
    }
    let correct = mask
        .iter()
        .filter(|&&v| {
            let row = logits.row(v);
            let mut best = 0;
            for j in 1..row.len() {
                if row[j] > row[best] {
                    best = j;
                }
            }
            labels.get(v).copied().flatten() == Some(best)
        })
        .count();
    correct as f64 / mask.len() as f64
}

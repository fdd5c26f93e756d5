//! Epoch loop: score materialization, metapath generation, forward, loss,
//! the full backward chain back to the raw score parameters, and Adam.

use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::{
    accuracy, cross_entropy, model_backward, model_forward, Architecture, FeatureMatrix, ModelState,
};
use crate::graph::HeteroGraph;
use crate::metapath_graph::MetapathGraph;
use crate::optim::Adam;
use crate::pathfinder::{
    backward_scores, backward_split, generate_split, generate_vanilla, EnumStrategy, SplitResult,
};
use crate::scoring::ScoreTable;
use crate::walker::{backward_sampled, generate_sampled, sample_walks, WalkSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[serde(rename = "gcn")]
    GcnBaseline,
    GgtnVanilla,
    GgtnSplit,
    Wgtn,
}

impl Mode {
    pub fn architecture(self) -> Architecture {
        match self {
            Mode::GcnBaseline => Architecture::GcnBaseline,
            _ => Architecture::Gtn,
        }
    }
}

/// Disjoint train/validation/test vertex sets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitMasks {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitMasks {
    pub fn validate(&self, num_vertices: usize) -> Result<()> {
        let mut seen = vec![false; num_vertices];
        for (name, set) in [
            ("train", &self.train),
            ("val", &self.val),
            ("test", &self.test),
        ] {
            for &v in set {
                if v >= num_vertices {
                    return Err(Error::Inconsistent(format!(
                        "{name} vertex {v} out of range ({num_vertices} vertices)"
                    )));
                }
                if seen[v] {
                    return Err(Error::Inconsistent(format!(
                        "vertex {v} appears in more than one split"
                    )));
                }
                seen[v] = true;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub mode: Mode,
    /// Metapath length is `transformer_layers + 1`.
    pub transformer_layers: usize,
    pub num_walks: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub eval_every: usize,
    pub timeout: Option<Duration>,
    pub strategy: EnumStrategy,
    /// Sample walks once and reuse them every epoch.
    pub freeze_walks: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: Mode::GgtnSplit,
            transformer_layers: 3,
            num_walks: 0,
            hidden: 64,
            epochs: 300,
            lr: crate::optim::DEFAULT_LR,
            seed: 0,
            eval_every: 5,
            timeout: Some(Duration::from_secs(8 * 60 * 60)),
            strategy: EnumStrategy::LevelByLevel,
            freeze_walks: false,
        }
    }
}

impl TrainConfig {
    pub fn metapath_length(&self) -> usize {
        self.transformer_layers + 1
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.hidden == 0 {
            return fail("hidden size must be positive");
        }
        if self.epochs == 0 {
            return fail("epochs must be positive");
        }
        if self.eval_every == 0 {
            return fail("eval_every must be positive");
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return fail("learning rate must be positive");
        }
        match self.mode {
            Mode::Wgtn if self.num_walks == 0 => fail("wgtn needs num_walks >= 1"),
            Mode::GgtnVanilla | Mode::GgtnSplit | Mode::Wgtn if self.transformer_layers == 0 => {
                fail("transformer_layers must be positive")
            }
            _ => Ok(()),
        }
    }
}

/// The metapath graph for one forward pass, with whatever the backward pass
/// needs to reach the score table.
#[derive(Debug, Clone)]
pub enum Generated {
    Fixed(MetapathGraph),
    Vanilla(MetapathGraph),
    Split(SplitResult),
    Sampled(MetapathGraph),
}

impl Generated {
    pub fn graph(&self) -> &MetapathGraph {
        match self {
            Generated::Fixed(mg) | Generated::Vanilla(mg) | Generated::Sampled(mg) => mg,
            Generated::Split(s) => &s.mg,
        }
    }
}

/// A training problem: graph, features and mode. Learnables live in
/// [`ModelState`].
pub struct Gtn<'a> {
    graph: HeteroGraph,
    features: &'a FeatureMatrix,
    mode: Mode,
    length: usize,
    strategy: EnumStrategy,
    fixed_table: Option<ScoreTable>,
    baseline: Option<MetapathGraph>,
}

/// Loss, logits and gradients of one forward/backward pass.
#[derive(Debug, Clone)]
pub struct PassOutput {
    pub loss: f64,
    pub logits: Array2<f64>,
    pub generated: Generated,
    /// Gradient on the raw score parameters (`None` when they are not learned).
    pub score_raw: Option<Array2<f64>>,
    pub w_gcn: Array2<f64>,
    pub w_hidden: Option<Array2<f64>>,
    pub w_out: Array2<f64>,
}

impl<'a> Gtn<'a> {
    /// `graph` is used as given; GTN modes normally pass a self-edge
    /// augmented graph, and walk sampling requires one.
    pub fn new(
        graph: HeteroGraph,
        features: &'a FeatureMatrix,
        mode: Mode,
        transformer_layers: usize,
        strategy: EnumStrategy,
    ) -> Result<Self> {
        if features.nrows() != graph.num_vertices() {
            return Err(Error::VertexCountMismatch {
                left: graph.num_vertices(),
                right: features.nrows(),
            });
        }
        let length = transformer_layers + 1;
        let baseline = match mode {
            Mode::GcnBaseline => {
                let mg = MetapathGraph::from_triplets(
                    graph.num_vertices(),
                    graph.edges().map(|e| (e.src, e.dst, 1.0)),
                )?;
                let ones = vec![1.0; mg.num_edges()];
                Some(mg.with_weights(ones)?)
            }
            _ => None,
        };
        Ok(Self {
            graph,
            features,
            mode,
            length,
            strategy,
            fixed_table: None,
            baseline,
        })
    }

    /// Uses `table` as-is for every epoch; score parameters are not learned.
    pub fn with_fixed_table(mut self, table: ScoreTable) -> Result<Self> {
        table.check_span(1, self.length)?;
        table.check_types(self.graph.num_edge_types())?;
        self.fixed_table = Some(table);
        Ok(self)
    }

    pub fn graph(&self) -> &HeteroGraph {
        &self.graph
    }

    pub fn features(&self) -> &FeatureMatrix {
        self.features
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn metapath_length(&self) -> usize {
        self.length
    }

    fn learns_scores(&self) -> bool {
        self.mode != Mode::GcnBaseline && self.fixed_table.is_none()
    }

    pub fn init_state(&self, hidden: usize, classes: usize, seed: u64) -> ModelState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let score_shape = self
            .learns_scores()
            .then(|| (self.length, self.graph.num_edge_types()));
        ModelState::init(
            self.mode.architecture(),
            score_shape,
            self.features.ncols(),
            hidden,
            classes,
            &mut rng,
        )
    }

    /// Scores for this pass: the injected table, or the softmax of the
    /// current parameters.
    pub fn score_table(&self, state: &ModelState) -> Result<Option<ScoreTable>> {
        if self.mode == Mode::GcnBaseline {
            return Ok(None);
        }
        if let Some(t) = &self.fixed_table {
            return Ok(Some(t.clone()));
        }
        let params = state
            .score_params
            .as_ref()
            .ok_or_else(|| Error::Config("model state has no score parameters".into()))?;
        Ok(Some(params.materialize_softmax()))
    }

    pub fn sample(&self, table: &ScoreTable, num_walks: usize, seed: u64) -> Result<WalkSet> {
        sample_walks(&self.graph, table, self.length, num_walks, seed)
    }

    pub fn generate(
        &self,
        table: Option<&ScoreTable>,
        walks: Option<&WalkSet>,
    ) -> Result<Generated> {
        let need_table = || table.ok_or_else(|| Error::Config("mode needs a score table".into()));
        Ok(match self.mode {
            Mode::GcnBaseline => Generated::Fixed(self.baseline.clone().unwrap()),
            Mode::GgtnVanilla => Generated::Vanilla(generate_vanilla(
                &self.graph,
                need_table()?,
                self.length,
                self.strategy,
            )?),
            Mode::GgtnSplit => Generated::Split(generate_split(
                &self.graph,
                need_table()?,
                self.length,
                self.strategy,
            )?),
            Mode::Wgtn => {
                let walks =
                    walks.ok_or_else(|| Error::Config("wgtn mode needs a walk set".into()))?;
                if walks.length() != self.length {
                    return Err(Error::WalkLengthMismatch {
                        walks: walks.length(),
                        expected: self.length,
                    });
                }
                Generated::Sampled(generate_sampled(&self.graph, need_table()?, walks)?)
            }
        })
    }

    /// Forward and full backward for one epoch's loss on `mask`.
    pub fn forward_backward(
        &self,
        state: &ModelState,
        walks: Option<&WalkSet>,
        labels: &[Option<usize>],
        mask: &[usize],
    ) -> Result<PassOutput> {
        let table = self.score_table(state)?;
        let generated = self.generate(table.as_ref(), walks)?;
        let mg = generated.graph();
        let cache = model_forward(mg, self.features, state)?;
        let (loss, dlogits) = cross_entropy(&cache.logits, labels, mask)?;
        let grads = model_backward(mg, self.features, state, &cache, &dlogits)?;

        let score_raw = match (&table, self.learns_scores()) {
            (Some(table), true) => {
                let grad_mg = mg.with_weights(grads.mg_edges)?;
                let grad_table = match &generated {
                    Generated::Vanilla(_) => {
                        backward_scores(&self.graph, table, self.length, &grad_mg, self.strategy)?
                    }
                    Generated::Split(split) => backward_split(
                        &self.graph,
                        table,
                        self.length,
                        split,
                        &grad_mg,
                        self.strategy,
                    )?,
                    Generated::Sampled(_) => backward_sampled(table, walks.unwrap(), &grad_mg)?,
                    Generated::Fixed(_) => unreachable!("baseline does not learn scores"),
                };
                let params = state.score_params.as_ref().unwrap();
                Some(params.softmax_backward(&grad_table)?)
            }
            _ => None,
        };
        Ok(PassOutput {
            loss,
            logits: cache.logits,
            generated,
            score_raw,
            w_gcn: grads.w_gcn,
            w_hidden: grads.w_hidden,
            w_out: grads.w_out,
        })
    }

    /// Loss only; used by finite-difference checks.
    pub fn loss(
        &self,
        state: &ModelState,
        walks: Option<&WalkSet>,
        labels: &[Option<usize>],
        mask: &[usize],
    ) -> Result<f64> {
        let table = self.score_table(state)?;
        let generated = self.generate(table.as_ref(), walks)?;
        let cache = model_forward(generated.graph(), self.features, state)?;
        Ok(cross_entropy(&cache.logits, labels, mask)?.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    /// 1-based
    pub epoch: usize,
    pub loss: f64,
    pub seconds: f64,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochMetrics>,
    pub peak_test_accuracy: Option<f64>,
    pub average_epoch_seconds: f64,
    pub timed_out: bool,
}

fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    seed ^ (epoch as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Runs the configured number of epochs, calling `on_epoch` after each one
/// with its metrics and the metapath graph it used.
pub fn train<F>(
    gtn: &Gtn<'_>,
    labels: &[Option<usize>],
    masks: &SplitMasks,
    num_classes: usize,
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<(TrainReport, ModelState)>
where
    F: FnMut(&EpochMetrics, &MetapathGraph),
{
    config.validate()?;
    if config.mode != gtn.mode() || config.metapath_length() != gtn.metapath_length() {
        return Err(Error::Config(
            "training config disagrees with the problem's mode or length".into(),
        ));
    }
    masks.validate(gtn.graph().num_vertices())?;
    if labels.len() != gtn.graph().num_vertices() {
        return Err(Error::VertexCountMismatch {
            left: gtn.graph().num_vertices(),
            right: labels.len(),
        });
    }

    let mut state = gtn.init_state(config.hidden, num_classes, config.seed);
    let mut adam = Adam::new(config.lr, &state.tensor_shapes());
    let mut frozen: Option<WalkSet> = None;
    let mut epochs = Vec::with_capacity(config.epochs);
    let mut timed_out = false;
    let started = Instant::now();

    for epoch in 1..=config.epochs {
        let t0 = Instant::now();
        let walks = if config.mode == Mode::Wgtn {
            if config.freeze_walks && frozen.is_some() {
                None
            } else {
                let table = gtn.score_table(&state)?.unwrap();
                Some(gtn.sample(&table, config.num_walks, epoch_seed(config.seed, epoch))?)
            }
        } else {
            None
        };
        if config.freeze_walks && frozen.is_none() {
            frozen = walks.clone();
        }
        let walks = walks.as_ref().or(frozen.as_ref());

        let out = gtn.forward_backward(&state, walks, labels, &masks.train)?;
        if !out.loss.is_finite() {
            return Err(Error::Config(format!("loss diverged at epoch {epoch}")));
        }
        {
            let mut grads: Vec<&Array2<f64>> = Vec::with_capacity(4);
            if let Some(g) = &out.score_raw {
                grads.push(g);
            }
            grads.push(&out.w_gcn);
            if let Some(g) = &out.w_hidden {
                grads.push(g);
            }
            grads.push(&out.w_out);
            adam.step(&mut state.tensors_mut(), &grads)?;
        }

        let evaluate = epoch % config.eval_every == 0 || epoch == config.epochs;
        let test_accuracy = (evaluate && !masks.test.is_empty())
            .then(|| accuracy(&out.logits, labels, &masks.test));
        let metrics = EpochMetrics {
            epoch,
            loss: out.loss,
            seconds: t0.elapsed().as_secs_f64(),
            train_accuracy: accuracy(&out.logits, labels, &masks.train),
            test_accuracy,
        };
        on_epoch(&metrics, out.generated.graph());
        epochs.push(metrics);

        if let Some(limit) = config.timeout {
            if started.elapsed() > limit && epoch < config.epochs {
                timed_out = true;
                break;
            }
        }
    }

    let peak_test_accuracy = epochs
        .iter()
        .filter_map(|m| m.test_accuracy)
        .fold(None, |best: Option<f64>, a| {
            Some(best.map_or(a, |b| b.max(a)))
        });
    let average_epoch_seconds =
        epochs.iter().map(|m| m.seconds).sum::<f64>() / epochs.len().max(1) as f64;
    Ok((
        TrainReport {
            epochs,
            peak_test_accuracy,
            average_epoch_seconds,
            timed_out,
        },
        state,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let mut c = TrainConfig {
            mode: Mode::Wgtn,
            num_walks: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c.num_walks = 10;
        c.validate().unwrap();
        c.epochs = 0;
        assert!(c.validate().is_err());
        assert_eq!(TrainConfig::default().metapath_length(), 4);
    }

    #[test]
    fn masks_must_be_disjoint() {
        let m = SplitMasks {
            train: vec![0, 1],
            val: vec![2],
            test: vec![1],
        };
        assert!(m.validate(3).is_err());
        let m = SplitMasks {
            train: vec![0],
            val: vec![],
            test: vec![5],
        };
        assert!(m.validate(3).is_err());
    }

    #[test]
    fn mode_serde_names() {
        assert_eq!(
            serde_json::to_string(&Mode::GcnBaseline).unwrap(),
            "\"gcn\""
        );
        assert_eq!(
            serde_json::to_string(&Mode::GgtnSplit).unwrap(),
            "\"ggtn-split\""
        );
        assert_eq!(serde_json::to_string(&Mode::Wgtn).unwrap(), "\"wgtn\"");
    }
}

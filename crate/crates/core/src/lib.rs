//! Metapath graph generation on heterogeneous graphs.
//!
//! A metapath graph connects `u` to `v` with the summed score of every
//! length-`l` typed path between them, where a path's score is the product of
//! per-position, per-type scores. Three routes build it: direct enumeration,
//! enumeration of two half-length graphs joined by sparse multiplication, and
//! sampling of score-weighted random walks. Each route has a matching
//! backward pass, and [`train`] wires them into a GCN-based node classifier.

pub mod dataset;
pub mod error;
pub mod gnn;
pub mod graph;
pub mod metapath_graph;
pub mod optim;
pub mod oracle;
pub mod pathfinder;
pub mod scoring;
pub mod train;
pub mod walker;

pub use error::{Error, Result};
pub use graph::{Edge, HeteroGraph};
pub use metapath_graph::MetapathGraph;
pub use pathfinder::{
    backward_scores, backward_split, compose_backward, compose_metapath_graphs, generate_split,
    generate_vanilla, EnumStrategy, SplitResult,
};
pub use scoring::{ScoreParams, ScoreTable};
pub use train::{train, Gtn, Mode, SplitMasks, TrainConfig, TrainReport};
pub use walker::{backward_sampled, generate_sampled, sample_walks, WalkSet};

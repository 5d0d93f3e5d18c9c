//! Network-based recommendation on user–object bipartite graphs and
//! information-core extraction.
//!
//! The pipeline: build a [`BipartiteGraph`] from interactions, split it into
//! training and probe links, rank users with a [`NeighborTable`], extract an
//! information core with [`extract_core`], and measure how much recall the
//! core alone retains with [`evaluate_system`] or a full [`run_experiment`].
//!
//! Per-user work runs on rayon when the `parallel` feature (on by default)
//! is enabled; every result is independent of the worker count.

pub mod config;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod fmt;
pub mod graph;
pub mod info_core;
pub mod io;
pub mod par;
pub mod recommend;
pub mod rng;
pub mod similarity;
pub mod synth;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use eval::{evaluate_system, recall_user, EvalOptions, SystemRecall};
pub use experiment::{run_experiment, run_on, ExperimentReport, ReportRow, SeedLabel};
pub use graph::{
    sample_users, split_train_probe, BipartiteGraph, InteractionList, ObjectId, SplitPair, UserId,
};
pub use info_core::{core_restricted_scores, extract_core, CoreMethod, CoreSet, UserRanking};
pub use par::Execution;
pub use recommend::{
    hybrid_scores, knnmd_scores, md_scores, select_neighbors, top_l, ucf_scores, Algorithm,
    CandidatePool, Diffuser, NeighborSelection, RecList, Scorer, ScoreVector, SelectionStrategy,
};
pub use similarity::{cosine, Neighbor, NeighborTable};
pub use synth::{generate_synthetic, DegreeDistribution, SyntheticSpec};

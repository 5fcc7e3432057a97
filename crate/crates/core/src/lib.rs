//! Diffusion-based recommendation on user-object bipartite networks.
//!
//! The crate covers the whole pipeline: ingesting interaction files into a
//! [`BipartiteGraph`], seeded train/test splitting, scoring users with the
//! mass-diffusion / heat-conduction kernel family (including the balanced
//! diffusion kernel, which puts the same degree exponent on both ends of the
//! transfer), ranking-based evaluation, and parameter sweeps.

pub mod dataset;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod kernel;
pub mod metrics;

pub use dataset::{ingest, split, FieldLayout, IdMaps, IngestStats, InteractionRecord, SplitDataset};
pub use error::{Error, Result};
pub use experiment::{
    compare_algorithms, find_optimal, run_grid, run_sweep, ComparisonReport, GridMetric, GridPlan, GridResult,
    ParamRange, SweepPlan, SweepPoint, SweepResult,
};
pub use graph::{build_graph, BipartiteGraph};
pub use kernel::{
    dense_transfer_matrix, recommend, score_user, Family, Kernel, KernelSpec, PdNormalization, RecommendationList,
    ScoreVector, TransferMatrix,
};
pub use metrics::{
    degree_binned_ranking_score, evaluate, hamming_distance, precision_enhancement, ranking_score, self_information,
    DegreeBinCurve, EvalOptions, Evaluation, Evaluator, LinkRank, MetricsReport,
};

//! Data attribution for weighted, hard-label K-nearest-neighbor classifiers
//! with discretized weights.
//!
//! The crate computes per-point Shapley values of the KNN validation
//! correctness in quadratic time by recasting the attribution as a subset
//! counting problem over a finite signed-weight grid, plus a deterministic
//! truncated approximation with a certified error interval. Brute-force
//! enumeration and Monte Carlo permutation sampling serve as ground-truth
//! baselines, and an evaluation harness covers corrupted-data detection and
//! runtime scaling.
//!
//! Typical flow: sort points by distance to a query ([`sort_by_distance`]),
//! weight them ([`assign_weights`]), snap the weights onto a grid
//! ([`discretize`]), and score with [`exact_shapley`], [`approx_shapley`],
//! or [`multiclass_shapley`]. Per-query scores sum across a validation set
//! via [`aggregate_over_validation`].

pub mod approx;
pub mod combinatorics;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod exact;
pub mod grid;
pub mod io;
pub mod multiclass;
pub mod oracle;
pub mod scores;
pub mod synthetic;
#[cfg(test)]
pub(crate) mod testutil;
pub mod unweighted;

pub use approx::{
    adaptive_mstar, approx_shapley, error_bound, ApproxConfig, ApproxScores, MstarPolicy,
};
pub use dataset::{
    assign_weights, discretize, quantize_unit, sort_by_distance, AssignedWeights, DiscreteWeights,
    Kernel, LabeledPoint, Metric, SortedDataset, ValQuery,
};
pub use error::{Error, Result};
pub use eval::{
    add_feature_noise, auroc, bench_runtime, flip_labels, score_run, BenchResult, Direction,
    EvalReport, Method, RunConfig, ScoredRun,
};
pub use exact::exact_shapley;
pub use grid::{build_count_table, compute_g, compute_r_stream, CountTable, SignedGrid};
pub use multiclass::{
    build_class_pair, multiclass_shapley, utility_vtilde, ClassPairSubset, SolveMethod,
};
pub use oracle::{
    brute_force_shapley, enumerate_shapley, monte_carlo_shapley, permutation_sample_count,
    utility_binary, utility_multiclass, OracleConfig, Subset,
};
pub use scores::{aggregate_over_validation, ScoreMethod, ShapleyScores};
pub use unweighted::{unweighted_knn_shapley, utility_soft_unweighted, UnweightedScores};

//! Embedding quality metrics and rank aggregation.
//!
//! Local: kNN recall and trustworthiness over `k = 10..=200`. Global: stress,
//! Spearman correlation of pairwise distances, and KL divergence between
//! kernel density estimates at two bandwidths.

pub mod distances;
pub mod neighbors;
pub mod ranks;
pub mod report;

pub use distances::{average_ranks, kl_sigma, pearson, spearman_distances, spearman_distances_sampled, stress};
pub use neighbors::{default_ks, knn_recall, trustworthiness};
pub use ranks::{aggregate_ranks, RankReport, RankTable};
pub use report::{
    evaluate_all, reports_to_csv, reports_to_table, subsample_indices, EvalMeta, EvalOptions, MetricsReport, METRICS,
};

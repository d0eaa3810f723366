//! k-means, clustering quality metrics and node-similarity-matrix scoring.

pub mod hungarian;
mod kmeans;
mod metrics;
mod nsm;

pub use kmeans::{kmeans, kmeans_single, ClusteringResult, KMeansConfig};
pub use metrics::{ari, clustering_accuracy, evaluate, macro_f1_mapped, nmi, MetricBundle};
pub use nsm::{
    best_split, mean_pairwise_cosine, nsm_compare, nsm_compare_binary, nsm_compare_soft, NsmRow,
    SPLIT_GRID,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClusterError {
    #[error("invalid clustering config: {0}")]
    InvalidConfig(String),
    #[error("{points} points cannot form {k} clusters")]
    TooFewPoints { points: usize, k: usize },
    #[error("label vectors differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

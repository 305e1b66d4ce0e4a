//! Clustering and graph primitives used by the detectors.
//!
//! Point-based methods take `&[Vec<f64>]` rows. Every stochastic step is
//! driven by an explicit seed, so repeated runs give identical results.

mod fuzzy;
mod graph;
mod kmeans;
mod knn;
mod optics;
mod silhouette;

use rayon::prelude::*;

pub use fuzzy::{fuzzy_cmeans, fuzzy_cmeans_traced, gustafson_kessel, gustafson_kessel_traced, harden_memberships, FcmResult, FuzzyConfig, GkClusterState, GkConfig, GkResult, MembershipMatrix};
pub use graph::{jarvis_patrick, modularity, newman_communities, SimilarityGraph};
pub use kmeans::{kmeans, KMeansResult};
pub use knn::knn_classify;
pub use optics::{optics, optics_order, select_clusters, xi_clusters, Optics, OpticsConfig, OpticsResult};
pub use silhouette::{silhouette, silhouette_from_distances};

/// Seed used when the caller does not pick one.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClusterError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("fewer than {0} distinct points; cannot place distinct centers")]
    CoincidentCenters(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cluster {0}: covariance is singular after regularization")]
    SingularCovariance(usize),
    #[error("silhouette undefined: fewer than two clusters")]
    SilhouetteUndefined,
    #[error("points have inconsistent dimensions")]
    Dimension,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Cosine,
    Euclidean,
}

impl Metric {
    pub fn parse(s: &str) -> Option<Metric> {
        match s.to_ascii_lowercase().as_str() {
            "cosine" => Some(Metric::Cosine),
            "euclidean" => Some(Metric::Euclidean),
            _ => None,
        }
    }

    /// Distance between two rows of equal length. A zero vector has no
    /// direction, so under cosine it sits at distance 1 from everything
    /// but another zero vector.
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => sq_euclidean(a, b).sqrt(),
            Metric::Cosine => {
                let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
                for (x, y) in a.iter().zip(b) {
                    dot += x * y;
                    na += x * x;
                    nb += y * y;
                }
                match (na == 0.0, nb == 0.0) {
                    (true, true) => 0.0,
                    (true, false) | (false, true) => 1.0,
                    _ => (1.0 - dot / (na.sqrt() * nb.sqrt())).clamp(0.0, 2.0),
                }
            }
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Metric::Cosine => "cosine",
            Metric::Euclidean => "euclidean",
        })
    }
}

pub(crate) fn sq_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn check_dims(points: &[Vec<f64>]) -> Result<usize, ClusterError> {
    let d = points.first().map_or(0, Vec::len);
    if points.iter().any(|p| p.len() != d) {
        return Err(ClusterError::Dimension);
    }
    Ok(d)
}

/// Full pairwise distance matrix. Rows are computed in parallel; each
/// entry depends only on its two points, so the result is order-free.
pub fn distance_matrix(points: &[Vec<f64>], metric: Metric) -> Vec<Vec<f64>> {
    (0..points.len())
        .into_par_iter()
        .map(|i| points.iter().map(|q| metric.distance(&points[i], q)).collect())
        .collect()
}

/// Relabels clusters densely in order of first appearance.
pub(crate) fn canonical_labels(raw: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    raw.iter()
        .map(|&r| {
            let next = map.len();
            *map.entry(r).or_insert(next)
        })
        .collect()
}

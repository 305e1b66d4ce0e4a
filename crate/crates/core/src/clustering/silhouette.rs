//! Mean silhouette coefficient.

use super::{distance_matrix, ClusterError, Metric};

pub fn silhouette(points: &[Vec<f64>], labels: &[usize], metric: Metric) -> Result<f64, ClusterError> {
    silhouette_from_distances(&distance_matrix(points, metric), labels)
}

/// Mean silhouette over all points of a precomputed distance matrix.
/// Points alone in their cluster score 0.
pub fn silhouette_from_distances(dist: &[Vec<f64>], labels: &[usize]) -> Result<f64, ClusterError> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(ClusterError::SilhouetteUndefined);
    }
    let total: f64 = (0..labels.len())
        .map(|i| {
            let own = labels[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for (j, &l) in labels.iter().enumerate() {
                if j != i {
                    sums[l] += dist[i][j];
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .sum();
    Ok(total / labels.len() as f64)
}

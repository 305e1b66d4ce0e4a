//! Lloyd's k-means with k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_dims, sq_euclidean, ClusterError};

/// k-means++ seeding: each new center is drawn with probability
/// proportional to its squared distance from the nearest chosen one.
pub(crate) fn kmeanspp(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>, ClusterError> {
    let first = rng.random_range(0..points.len());
    let mut centers = vec![points[first].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_euclidean(p, &points[first])).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        if !(total > 0.0) {
            return Err(ClusterError::CoincidentCenters(k));
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = None;
        for (i, &w) in nearest.iter().enumerate() {
            if w > 0.0 {
                pick = Some(i);
                if target < w {
                    break;
                }
                target -= w;
            }
        }
        let pick = pick.expect("some point has positive weight");
        centers.push(points[pick].clone());
        for (n, p) in nearest.iter_mut().zip(points) {
            *n = n.min(sq_euclidean(p, &points[pick]));
        }
    }
    Ok(centers)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    /// Sum of squared distances to the assigned centers.
    pub inertia: f64,
    pub iterations: usize,
}

const MAX_ITER: usize = 300;

fn nearest_center(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    centers
        .iter()
        .enumerate()
        .map(|(k, c)| (k, sq_euclidean(p, c)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansResult, ClusterError> {
    if k == 0 {
        return Err(ClusterError::InvalidParameter("k must be positive".into()));
    }
    if k > points.len() {
        return Err(ClusterError::TooFewPoints { needed: k, got: points.len() });
    }
    let d = check_dims(points)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = kmeanspp(points, k, &mut rng)?;
    let mut labels: Vec<usize> = points.iter().map(|p| nearest_center(p, &centers).0).collect();
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for (c, (sum, count)) in centers.iter_mut().zip(sums.into_iter().zip(counts)) {
            // an emptied cluster keeps its old center
            if count > 0 {
                *c = sum.into_iter().map(|s| s / count as f64).collect();
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest_center(p, &centers).0).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    let inertia = points.iter().zip(&labels).map(|(p, &l)| sq_euclidean(p, &centers[l])).sum();
    Ok(KMeansResult {
        labels,
        centers,
        inertia,
        iterations,
    })
}

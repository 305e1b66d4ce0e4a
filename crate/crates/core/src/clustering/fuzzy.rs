//! Fuzzy c-means and the Gustafson-Kessel variant with per-cluster norms.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::kmeans::kmeanspp;
use super::{check_dims, sq_euclidean, ClusterError, DEFAULT_SEED};

/// Row `i` holds the memberships of point `i`; each row sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix {
    rows: Vec<Vec<f64>>,
    pub m: f64,
    pub epsilon: f64,
}

impl MembershipMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>, m: f64, epsilon: f64) -> Result<Self, ClusterError> {
        let c = rows.first().map_or(0, Vec::len);
        for (i, row) in rows.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.len() != c || row.iter().any(|u| !(0.0..=1.0).contains(u)) || (sum - 1.0).abs() > 1e-9 {
                return Err(ClusterError::InvalidParameter(format!("membership row {i} is not a distribution")));
            }
        }
        Ok(MembershipMatrix { rows, m, epsilon })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn n_points(&self) -> usize {
        self.rows.len()
    }

    pub fn n_clusters(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn get(&self, point: usize, cluster: usize) -> f64 {
        self.rows[point][cluster]
    }
}

/// Crisp labels by row argmax; ties go to the lower cluster index.
pub fn harden_memberships(mu: &MembershipMatrix) -> Vec<usize> {
    mu.rows
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (k, &u)| if u > best.1 { (k, u) } else { best })
                .0
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuzzyConfig {
    pub c: usize,
    /// Fuzzifier, greater than 1.
    pub m: f64,
    /// Stop once no membership moves by this much.
    pub epsilon: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for FuzzyConfig {
    fn default() -> Self {
        FuzzyConfig {
            c: 2,
            m: 1.1,
            epsilon: 0.001,
            max_iter: 300,
            seed: DEFAULT_SEED,
        }
    }
}

impl FuzzyConfig {
    fn validate(&self, n: usize) -> Result<(), ClusterError> {
        if self.c < 2 {
            return Err(ClusterError::InvalidParameter(format!("c must be at least 2, got {}", self.c)));
        }
        if !(self.m > 1.0) || !self.m.is_finite() {
            return Err(ClusterError::InvalidParameter(format!("fuzzifier m must exceed 1, got {}", self.m)));
        }
        if !(self.epsilon > 0.0) {
            return Err(ClusterError::InvalidParameter(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if n < self.c {
            return Err(ClusterError::TooFewPoints { needed: self.c, got: n });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcmResult {
    pub memberships: MembershipMatrix,
    pub centers: Vec<Vec<f64>>,
    pub iterations: usize,
    /// Final value of `sum_ik u_ik^m d_ik^2`.
    pub objective: f64,
}

/// Memberships of one point from its squared distances to every center:
/// `u_k = 1 / sum_j (d_k / d_j)^(2 / (m - 1))`, evaluated in the log domain
/// because the exponent is 20 at m = 1.1. A point sitting on centers shares
/// its membership equally among them.
fn membership_row(d2: &[f64], m: f64) -> Vec<f64> {
    let zeros = d2.iter().filter(|&&d| d <= 0.0).count();
    if zeros > 0 {
        return d2.iter().map(|&d| if d <= 0.0 { 1.0 / zeros as f64 } else { 0.0 }).collect();
    }
    let logs: Vec<f64> = d2.iter().map(|&d| -d.ln() / (m - 1.0)).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn weighted_centers(points: &[Vec<f64>], mu: &[Vec<f64>], m: f64, previous: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = points[0].len();
    (0..previous.len())
        .map(|k| {
            let mut num = vec![0.0; d];
            let mut den = 0.0;
            for (x, row) in points.iter().zip(mu) {
                let w = row[k].powf(m);
                den += w;
                for (a, v) in num.iter_mut().zip(x) {
                    *a += w * v;
                }
            }
            if den > 0.0 {
                num.iter().map(|a| a / den).collect()
            } else {
                previous[k].clone()
            }
        })
        .collect()
}

fn max_change(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

fn objective(d2: &[Vec<f64>], mu: &[Vec<f64>], m: f64) -> f64 {
    d2.iter()
        .zip(mu)
        .map(|(dr, ur)| dr.iter().zip(ur).map(|(d, u)| u.powf(m) * d).sum::<f64>())
        .sum()
}

pub fn fuzzy_cmeans(points: &[Vec<f64>], cfg: &FuzzyConfig) -> Result<FcmResult, ClusterError> {
    fuzzy_cmeans_traced(points, cfg, |_, _| {})
}

/// [`fuzzy_cmeans`], reporting the memberships and objective after every
/// iteration.
pub fn fuzzy_cmeans_traced(points: &[Vec<f64>], cfg: &FuzzyConfig, mut on_iter: impl FnMut(&MembershipMatrix, f64)) -> Result<FcmResult, ClusterError> {
    cfg.validate(points.len())?;
    check_dims(points)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centers = kmeanspp(points, cfg.c, &mut rng)?;
    let sq = |centers: &[Vec<f64>]| -> Vec<Vec<f64>> { points.iter().map(|x| centers.iter().map(|v| sq_euclidean(x, v)).collect()).collect() };
    let mut d2 = sq(&centers);
    let mut mu: Vec<Vec<f64>> = d2.iter().map(|r| membership_row(r, cfg.m)).collect();
    let mut iterations = 0;
    let mut obj = objective(&d2, &mu, cfg.m);
    while iterations < cfg.max_iter {
        iterations += 1;
        centers = weighted_centers(points, &mu, cfg.m, &centers);
        d2 = sq(&centers);
        let next: Vec<Vec<f64>> = d2.iter().map(|r| membership_row(r, cfg.m)).collect();
        obj = objective(&d2, &next, cfg.m);
        let delta = max_change(&mu, &next);
        mu = next;
        on_iter(
            &MembershipMatrix {
                rows: mu.clone(),
                m: cfg.m,
                epsilon: cfg.epsilon,
            },
            obj,
        );
        if delta < cfg.epsilon {
            break;
        }
    }
    Ok(FcmResult {
        memberships: MembershipMatrix {
            rows: mu,
            m: cfg.m,
            epsilon: cfg.epsilon,
        },
        centers,
        iterations,
        objective: obj,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GkClusterState {
    pub centers: Vec<Vec<f64>>,
    /// Fuzzy covariances after regularization.
    pub covariances: Vec<DMatrix<f64>>,
    /// `A_i = (rho_i det C_i)^(1/d) C_i^-1`.
    pub norm_matrices: Vec<DMatrix<f64>>,
    pub volumes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GkResult {
    pub memberships: MembershipMatrix,
    pub state: GkClusterState,
    pub iterations: usize,
}

/// Covariance, norm matrix, and squared norm distances of one cluster.
fn gk_cluster(points: &[Vec<f64>], mu: &[Vec<f64>], k: usize, center: &[f64], m: f64, rho: f64) -> Result<(DMatrix<f64>, DMatrix<f64>, Vec<f64>), ClusterError> {
    let d = center.len();
    let v = DVector::from_column_slice(center);
    let mut cov = DMatrix::<f64>::zeros(d, d);
    let mut den = 0.0;
    for (x, row) in points.iter().zip(mu) {
        let w = row[k].powf(m);
        let diff = DVector::from_column_slice(x) - &v;
        cov += w * &diff * diff.transpose();
        den += w;
    }
    if den > 0.0 {
        cov /= den;
    }
    let lambda = 1e-6 * cov.trace() / d as f64;
    for i in 0..d {
        cov[(i, i)] += lambda;
    }
    let chol = cov.clone().cholesky().ok_or(ClusterError::SingularCovariance(k))?;
    let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>();
    if !log_det.is_finite() {
        return Err(ClusterError::SingularCovariance(k));
    }
    let scale = ((rho.ln() + log_det) / d as f64).exp();
    let norm = chol.inverse() * scale;
    let d2 = points
        .iter()
        .map(|x| {
            let diff = DVector::from_column_slice(x) - &v;
            (diff.transpose() * &norm * &diff)[(0, 0)].max(0.0)
        })
        .collect();
    Ok((cov, norm, d2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GkConfig {
    pub fuzzy: FuzzyConfig,
    /// Cluster volume `rho`, shared by all clusters.
    pub rho: f64,
    /// Extra starts from random points besides the fuzzy c-means solution.
    pub restarts: usize,
}

impl Default for GkConfig {
    fn default() -> Self {
        GkConfig {
            fuzzy: FuzzyConfig::default(),
            rho: 1.0,
            restarts: 4,
        }
    }
}

/// Gustafson-Kessel clustering. The first start is the fuzzy c-means
/// solution; the others begin from uniformly drawn points with derived seeds.
/// The run with the lowest objective wins, so elongated clusters that
/// round-cluster initialisations cut across can still be found.
pub fn gustafson_kessel(points: &[Vec<f64>], cfg: &GkConfig) -> Result<GkResult, ClusterError> {
    gustafson_kessel_traced(points, cfg, |_| {})
}

pub fn gustafson_kessel_traced(points: &[Vec<f64>], cfg: &GkConfig, mut on_iter: impl FnMut(&MembershipMatrix)) -> Result<GkResult, ClusterError> {
    let fc = &cfg.fuzzy;
    fc.validate(points.len())?;
    let d = check_dims(points)?;
    if points.len() <= d {
        return Err(ClusterError::TooFewPoints {
            needed: d + 1,
            got: points.len(),
        });
    }
    if !(cfg.rho > 0.0) {
        return Err(ClusterError::InvalidParameter(format!("cluster volume must be positive, got {}", cfg.rho)));
    }
    let init = fuzzy_cmeans(points, fc)?;
    let mut best: Option<(f64, GkResult)> = None;
    let mut first_err = None;
    for start in 0..=cfg.restarts {
        let (mu, centers) = if start == 0 {
            (init.memberships.rows.clone(), init.centers.clone())
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(fc.seed.wrapping_add(start as u64));
            let centers: Vec<Vec<f64>> = rand::seq::index::sample(&mut rng, points.len(), fc.c)
                .into_iter()
                .map(|i| points[i].clone())
                .collect();
            let mu = points
                .iter()
                .map(|x| membership_row(&centers.iter().map(|v| sq_euclidean(x, v)).collect::<Vec<_>>(), fc.m))
                .collect();
            (mu, centers)
        };
        match gk_run(points, cfg, mu, centers, &mut on_iter) {
            Ok((obj, res)) => {
                if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                    best = Some((obj, res));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some((_, res)) => Ok(res),
        None => Err(first_err.expect("at least one start ran")),
    }
}

fn gk_run(points: &[Vec<f64>], cfg: &GkConfig, mut mu: Vec<Vec<f64>>, mut centers: Vec<Vec<f64>>, on_iter: &mut impl FnMut(&MembershipMatrix)) -> Result<(f64, GkResult), ClusterError> {
    let fc = &cfg.fuzzy;
    let mut covariances = Vec::new();
    let mut norms = Vec::new();
    let mut iterations = 0;
    let mut obj = f64::INFINITY;
    while iterations < fc.max_iter {
        iterations += 1;
        centers = weighted_centers(points, &mu, fc.m, &centers);
        let mut d2 = vec![vec![0.0; fc.c]; points.len()];
        covariances.clear();
        norms.clear();
        for (k, center) in centers.iter().enumerate() {
            let (cov, norm, dk) = gk_cluster(points, &mu, k, center, fc.m, cfg.rho)?;
            for (row, v) in d2.iter_mut().zip(dk) {
                row[k] = v;
            }
            covariances.push(cov);
            norms.push(norm);
        }
        let next: Vec<Vec<f64>> = d2.iter().map(|r| membership_row(r, fc.m)).collect();
        obj = objective(&d2, &next, fc.m);
        let delta = max_change(&mu, &next);
        mu = next;
        on_iter(&MembershipMatrix {
            rows: mu.clone(),
            m: fc.m,
            epsilon: fc.epsilon,
        });
        if delta < fc.epsilon {
            break;
        }
    }
    let result = GkResult {
        memberships: MembershipMatrix {
            rows: mu,
            m: fc.m,
            epsilon: fc.epsilon,
        },
        state: GkClusterState {
            centers,
            covariances,
            norm_matrices: norms,
            volumes: vec![cfg.rho; fc.c],
        },
        iterations,
    };
    Ok((obj, result))
}

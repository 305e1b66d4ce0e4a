//! Multiclass, multicluster FS scores. Every cluster and every class gets
//! an impurity score from a pluggable kernel; the aggregates weight those
//! scores by how much labelled mass each cluster or class carries. Lower
//! is better.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::topic::Topic;

use super::{EvalError, GoldenStandard};

/// Assignment mass between golden classes (rows) and detected clusters
/// (columns). A post in cluster `j` labelled with class `i` adds its score
/// to cell `(i, j)`; posts may sit in several clusters and several classes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Contingency {
    pub classes: Vec<String>,
    pub cells: Vec<Vec<f64>>,
    pub n_clusters: usize,
    /// Cluster memberships whose post has no golden record.
    pub unlabeled: usize,
    /// Cluster memberships whose post is labelled with no class.
    pub classless: usize,
}

impl Contingency {
    pub fn new(classes: Vec<String>, cells: Vec<Vec<f64>>) -> Self {
        let n_clusters = cells.first().map_or(0, Vec::len);
        Contingency {
            classes,
            cells,
            n_clusters,
            unlabeled: 0,
            classless: 0,
        }
    }

    /// Builds the table for one window's topics. Every class of the golden
    /// standard gets a row, whether or not it is assigned.
    pub fn build(topics: &[Topic], golden: &GoldenStandard) -> Self {
        let classes: Vec<String> = golden.labels.values().flat_map(|(c, _)| c.iter().cloned()).chain(golden.catalog.keys().cloned()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let row: BTreeMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let mut cells = vec![vec![0.0; topics.len()]; classes.len()];
        let (mut unlabeled, mut classless) = (0, 0);
        for (j, topic) in topics.iter().enumerate() {
            for id in &topic.post_ids {
                match golden.labels.get(id) {
                    None => unlabeled += 1,
                    Some((c, _)) if c.is_empty() => classless += 1,
                    Some((c, score)) => {
                        for class in c {
                            cells[row[class.as_str()]][j] += score;
                        }
                    }
                }
            }
        }
        Contingency {
            classes,
            cells,
            n_clusters: topics.len(),
            unlabeled,
            classless,
        }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.cells.iter().map(|r| r[j]).collect()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.cells[i]
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().flatten().sum()
    }
}

/// Impurity of one cluster (over classes) or one class (over clusters).
pub trait FsKernel {
    fn cluster_score(&self, mass_per_class: &[f64]) -> f64;
    fn class_score(&self, mass_per_cluster: &[f64]) -> f64;
}

/// Shannon entropy of the mass distribution, normalised by the log of the
/// number of alternatives, so 0 is pure and 1 is uniform.
#[derive(Debug, Clone, Copy, Default)]
pub struct EntropyKernel;

impl EntropyKernel {
    fn normalized_entropy(mass: &[f64]) -> f64 {
        let total: f64 = mass.iter().sum();
        if total <= 0.0 || mass.len() < 2 {
            return 0.0;
        }
        let h: f64 = mass.iter().filter(|&&m| m > 0.0).map(|&m| -(m / total) * (m / total).ln()).sum();
        h / (mass.len() as f64).ln()
    }
}

impl FsKernel for EntropyKernel {
    fn cluster_score(&self, mass_per_class: &[f64]) -> f64 {
        Self::normalized_entropy(mass_per_class)
    }

    fn class_score(&self, mass_per_cluster: &[f64]) -> f64 {
        Self::normalized_entropy(mass_per_cluster)
    }
}

/// `sum_j score_j * weight_j / sum_j weight_j`.
pub fn weighted_mean(scores: &[f64], weights: &[f64]) -> Result<f64, EvalError> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(EvalError::EmptyOutput);
    }
    Ok(scores.iter().zip(weights).map(|(s, w)| s * w).sum::<f64>() / total)
}

pub fn cluster_fs(table: &Contingency, kernel: &impl FsKernel) -> Result<f64, EvalError> {
    let scores: Vec<f64> = (0..table.n_clusters).map(|j| kernel.cluster_score(&table.column(j))).collect();
    let weights: Vec<f64> = (0..table.n_clusters).map(|j| table.column(j).iter().sum()).collect();
    weighted_mean(&scores, &weights)
}

pub fn class_fs(table: &Contingency, kernel: &impl FsKernel) -> Result<f64, EvalError> {
    let scores: Vec<f64> = (0..table.classes.len()).map(|i| kernel.class_score(table.row(i))).collect();
    let weights: Vec<f64> = (0..table.classes.len()).map(|i| table.row(i).iter().sum()).collect();
    weighted_mean(&scores, &weights)
}

pub fn mean_fs(class_fs: f64, cluster_fs: f64) -> f64 {
    (class_fs + cluster_fs) / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsScores {
    pub per_cluster: Vec<f64>,
    pub per_class: BTreeMap<String, f64>,
    pub cluster_fs: f64,
    pub class_fs: f64,
    pub mean_fs: f64,
}

pub fn fs_scores(table: &Contingency, kernel: &impl FsKernel) -> Result<FsScores, EvalError> {
    let cluster = cluster_fs(table, kernel)?;
    let class = class_fs(table, kernel)?;
    Ok(FsScores {
        per_cluster: (0..table.n_clusters).map(|j| kernel.cluster_score(&table.column(j))).collect(),
        per_class: table.classes.iter().enumerate().map(|(i, c)| (c.clone(), kernel.class_score(table.row(i)))).collect(),
        cluster_fs: cluster,
        class_fs: class,
        mean_fs: mean_fs(class, cluster),
    })
}

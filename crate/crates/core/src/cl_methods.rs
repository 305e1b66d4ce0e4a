//! Embedding-and-clustering detectors: each post becomes the mean of its
//! word vectors, posts are clustered, and every cluster is one topic.

use std::collections::BTreeSet;

use crate::clustering::{
    distance_matrix, fuzzy_cmeans, gustafson_kessel, harden_memberships, optics, silhouette_from_distances, ClusterError, FuzzyConfig, GkConfig, Metric,
    OpticsConfig, DEFAULT_SEED,
};
use crate::embeddings::{embed_document, EmbeddingError, EmbeddingSource, EmbeddingTable, OovPolicy};
use crate::preprocess::{compound_title, CompoundLexicon};
use crate::stream::{Post, WindowBatch};
use crate::topic::{rank_title_words, Topic};

#[derive(Debug, thiserror::Error)]
pub enum ClError {
    #[error("none of the {0} posts in the window could be embedded")]
    Unembeddable(usize),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

/// How many clusters a fuzzy method uses in a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterCount {
    Fixed(usize),
    /// Try every count in the range and keep the best silhouette.
    BySilhouette { min: usize, max: usize },
}

impl Default for ClusterCount {
    fn default() -> Self {
        ClusterCount::BySilhouette { min: 2, max: 12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClusterKind {
    Optics { min_pts: usize, xi: f64 },
    CMeans { count: ClusterCount },
    GustafsonKessel { count: ClusterCount, rho: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClPipelineConfig {
    pub source: EmbeddingSource,
    pub kind: ClusterKind,
    /// Distance for OPTICS and for silhouette scoring. The fuzzy methods
    /// always fit with squared Euclidean distance.
    pub metric: Metric,
    pub m: f64,
    pub epsilon: f64,
    pub title_words: usize,
    pub oov: OovPolicy,
    pub seed: u64,
}

impl ClPipelineConfig {
    fn with(source: EmbeddingSource, kind: ClusterKind, metric: Metric) -> Self {
        ClPipelineConfig {
            source,
            kind,
            metric,
            m: 1.1,
            epsilon: 0.001,
            title_words: 5,
            oov: OovPolicy::Skip,
            seed: DEFAULT_SEED,
        }
    }

    /// Word2Vec vectors clustered by OPTICS.
    pub fn wvop() -> Self {
        Self::with(EmbeddingSource::Word2Vec, ClusterKind::Optics { min_pts: 5, xi: 0.05 }, Metric::Cosine)
    }

    /// FastText vectors clustered by OPTICS.
    pub fn ftop() -> Self {
        Self::with(EmbeddingSource::FastText, ClusterKind::Optics { min_pts: 5, xi: 0.05 }, Metric::Cosine)
    }

    /// GloVe vectors clustered by fuzzy c-means.
    pub fn glcm() -> Self {
        Self::with(EmbeddingSource::Glove, ClusterKind::CMeans { count: ClusterCount::default() }, Metric::Euclidean)
    }

    /// GloVe vectors clustered by Gustafson-Kessel.
    pub fn glgk() -> Self {
        Self::with(
            EmbeddingSource::Glove,
            ClusterKind::GustafsonKessel {
                count: ClusterCount::default(),
                rho: 1.0,
            },
            Metric::Euclidean,
        )
    }

    fn fuzzy(&self, c: usize) -> FuzzyConfig {
        FuzzyConfig {
            c,
            m: self.m,
            epsilon: self.epsilon,
            max_iter: 300,
            seed: self.seed,
        }
    }
}

/// Cluster label per point, `None` for noise.
fn cluster_points(points: &[Vec<f64>], cfg: &ClPipelineConfig) -> Result<Vec<Option<usize>>, ClusterError> {
    let (count, rho) = match cfg.kind {
        ClusterKind::Optics { min_pts, xi } => {
            let oc = OpticsConfig {
                min_pts,
                xi,
                metric: cfg.metric,
                min_cluster_size: None,
            };
            return Ok(optics(points, &oc)?.labels);
        }
        ClusterKind::CMeans { count } => (count, None),
        ClusterKind::GustafsonKessel { count, rho } => (count, Some(rho)),
    };
    let n = points.len();
    let run = |c: usize| -> Result<Vec<usize>, ClusterError> {
        let fc = cfg.fuzzy(c);
        let mu = match rho {
            None => fuzzy_cmeans(points, &fc)?.memberships,
            Some(rho) => match gustafson_kessel(points, &GkConfig { fuzzy: fc, rho, ..GkConfig::default() }) {
                Ok(res) => res.memberships,
                // too few posts for a full covariance: fall back to round clusters
                Err(ClusterError::TooFewPoints { .. }) => {
                    log::warn!("{n} posts are too few for Gustafson-Kessel at this dimension; using fuzzy c-means");
                    fuzzy_cmeans(points, &fc)?.memberships
                }
                Err(e) => return Err(e),
            },
        };
        Ok(harden_memberships(&mu))
    };
    let labels = match count {
        ClusterCount::Fixed(c) => run(c.min(n))?,
        ClusterCount::BySilhouette { min, max } => {
            let dist = distance_matrix(points, cfg.metric);
            let mut best: Option<(f64, Vec<usize>)> = None;
            for c in min.max(2)..=max.min(n.saturating_sub(1)) {
                let labels = match run(c) {
                    Ok(l) => l,
                    Err(e) => {
                        log::debug!("c = {c}: {e}");
                        continue;
                    }
                };
                let Ok(score) = silhouette_from_distances(&dist, &labels) else { continue };
                if best.as_ref().is_none_or(|(b, _)| score > *b) {
                    best = Some((score, labels));
                }
            }
            match best {
                Some((_, labels)) => labels,
                // nothing to compare: the window is one group
                None => vec![0; n],
            }
        }
    };
    Ok(labels.into_iter().map(Some).collect())
}

/// Detects topics in one window by clustering post embeddings.
pub fn cl_detect(batch: &WindowBatch, table: &EmbeddingTable, cfg: &ClPipelineConfig, compounds: Option<&CompoundLexicon>) -> Result<Vec<Topic>, ClError> {
    if batch.is_empty() {
        return Ok(Vec::new());
    }
    let mut embedded: Vec<&Post> = Vec::new();
    let mut points = Vec::new();
    for post in &batch.posts {
        match embed_document(post.words(), table, cfg.oov) {
            Ok(v) => {
                embedded.push(post);
                points.push(v.vector);
            }
            Err(EmbeddingError::Unembeddable(_) | EmbeddingError::EmptyDocument) => {}
            Err(e) => unreachable!("embedding a document cannot fail with {e}"),
        }
    }
    if points.is_empty() {
        return Err(ClError::Unembeddable(batch.len()));
    }
    if points.len() < batch.len() {
        log::debug!("window {}: {} of {} posts had no vectors", batch.index, batch.len() - points.len(), batch.len());
    }
    let labels = cluster_points(&points, cfg)?;

    let k = labels.iter().flatten().max().map_or(0, |m| m + 1);
    let mut groups: Vec<Vec<&Post>> = vec![Vec::new(); k];
    for (post, label) in embedded.iter().zip(&labels) {
        if let Some(l) = label {
            groups[*l].push(post);
        }
    }
    let doc_freq = batch.doc_frequencies();
    let topics = groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .filter_map(|group| {
            let mut keywords = rank_title_words(&group, &doc_freq, batch.len(), cfg.title_words, None);
            if let Some(lex) = compounds {
                keywords = compound_title(&keywords, lex);
            }
            if keywords.is_empty() {
                return None;
            }
            let post_ids: BTreeSet<String> = group.iter().map(|p| p.id.clone()).collect();
            let score = post_ids.len() as f64;
            Some(Topic::new(keywords, post_ids, score))
        })
        .collect();
    Ok(topics)
}

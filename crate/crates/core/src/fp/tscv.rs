//! Term selection with co-occurrence vectors.
//!
//! Words are ranked by how much more likely they are in the window than in
//! a reference corpus. The top `k` are grown into topics greedily: a seed
//! word's post-incidence vector absorbs the best-matching remaining word
//! while the cosine similarity beats a size-dependent sigmoid threshold.

use std::collections::BTreeSet;

use crate::background::RefCorpusModel;
use crate::stream::WindowBatch;
use crate::topic::Topic;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TscvConfig {
    /// Number of top terms kept.
    pub k: usize,
    /// Sigmoid midpoint of the acceptance threshold.
    pub b: f64,
    /// Sigmoid scale of the acceptance threshold.
    pub c: f64,
}

impl Default for TscvConfig {
    fn default() -> Self {
        TscvConfig { k: 50, b: 5.0, c: 2.0 }
    }
}

/// Similarity a candidate must exceed to join a topic of `size` words:
/// `1 - 1 / (1 + exp((size - b) / c))`.
pub fn theta(size: usize, b: f64, c: f64) -> f64 {
    1.0 - 1.0 / (1.0 + ((size as f64 - b) / c).exp())
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}

/// Ratio of the add-one smoothed window probability to the reference
/// probability, for every word of the batch, best first.
pub(crate) fn term_scores(batch: &WindowBatch, reference: &RefCorpusModel) -> Vec<(String, f64)> {
    let denom = (batch.token_count() + batch.tf.len() as u64) as f64;
    let mut scored: Vec<(String, f64)> = batch
        .tf
        .iter()
        .map(|(w, &tf)| (w.clone(), ((tf + 1) as f64 / denom) / reference.probability(w)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored
}

/// One greedy growth step's bookkeeping, exposed for tests.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct GrownTopic {
    pub words: Vec<usize>,
    pub vector: Vec<f64>,
}

/// Grows topics from binary incidence vectors of the ranked terms.
pub(crate) fn grow_topics(vectors: &[Vec<f64>], cfg: &TscvConfig, mut on_step: impl FnMut(&GrownTopic)) -> Vec<Vec<usize>> {
    let mut remaining: Vec<usize> = (0..vectors.len()).collect();
    let mut topics = Vec::new();
    while !remaining.is_empty() {
        let seed = remaining.remove(0);
        let mut grown = GrownTopic {
            words: vec![seed],
            vector: vectors[seed].clone(),
        };
        loop {
            let best = remaining
                .iter()
                .enumerate()
                .map(|(pos, &w)| (pos, cosine(&grown.vector, &vectors[w])))
                .fold(None, |acc: Option<(usize, f64)>, cur| match acc {
                    Some(a) if a.1 >= cur.1 => Some(a),
                    _ => Some(cur),
                });
            let Some((pos, sim)) = best else { break };
            if sim <= theta(grown.words.len(), cfg.b, cfg.c) {
                break;
            }
            let word = remaining.remove(pos);
            grown.words.push(word);
            for (d, x) in grown.vector.iter_mut().zip(&vectors[word]) {
                *d += x;
            }
            let floor = grown.words.len() as f64 / 2.0;
            for d in grown.vector.iter_mut() {
                if *d < floor {
                    *d = 0.0;
                }
            }
            on_step(&grown);
        }
        topics.push(grown.words);
    }
    topics
}

/// Detects topics in one window. Each topic's posts are those containing
/// at least half of its words.
pub fn tscv_detect(batch: &WindowBatch, reference: &RefCorpusModel, cfg: &TscvConfig) -> Vec<Topic> {
    if batch.is_empty() || batch.tf.is_empty() {
        return Vec::new();
    }
    let scored = term_scores(batch, reference);
    if cfg.k > scored.len() {
        log::warn!(
            "window {}: k = {} exceeds the {} distinct words; using all of them",
            batch.index,
            cfg.k,
            scored.len()
        );
    }
    let top: Vec<(String, f64)> = scored.into_iter().take(cfg.k.max(1)).collect();

    let vectors: Vec<Vec<f64>> = top
        .iter()
        .map(|(w, _)| {
            batch
                .posts
                .iter()
                .map(|p| if p.words().contains(w) { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();

    let mut seen: BTreeSet<Vec<String>> = BTreeSet::new();
    let mut topics = Vec::new();
    for members in grow_topics(&vectors, cfg, |_| {}) {
        let mut key: Vec<String> = members.iter().map(|&i| top[i].0.clone()).collect();
        key.sort();
        if !seen.insert(key) {
            continue;
        }
        let keywords: Vec<String> = members.iter().map(|&i| top[i].0.clone()).collect();
        let needed = members.len().div_ceil(2);
        let post_ids = batch
            .posts
            .iter()
            .enumerate()
            .filter(|(p, _)| members.iter().filter(|&&i| vectors[i][*p] > 0.0).count() >= needed)
            .map(|(_, post)| post.id.clone())
            .collect();
        let score = members.iter().map(|&i| top[i].1).sum::<f64>() / members.len() as f64;
        topics.push(Topic::new(keywords, post_ids, score));
    }
    topics
}

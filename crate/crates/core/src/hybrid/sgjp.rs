//! Segment-based detection: posts are cut into sticky phrases, phrases
//! seen in enough posts become topic segments, and segments that share
//! posts are grouped with Jarvis-Patrick.

use std::collections::{BTreeMap, BTreeSet};

use crate::clustering::{jarvis_patrick, SimilarityGraph};
use crate::stream::WindowBatch;
use crate::topic::Topic;

use super::segment::{segment_post, PhraseModel};
use super::jaccard;

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub words: Vec<String>,
    pub stickiness: f64,
    pub post_ids: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SgjpConfig {
    /// Longest segment, in words.
    pub h: usize,
    /// Minimum number of posts a segment must appear in.
    pub threshold: usize,
    /// Neighbour list length for Jarvis-Patrick.
    pub k: usize,
    /// Shared neighbours needed to link two segments.
    pub k_min: usize,
}

impl Default for SgjpConfig {
    fn default() -> Self {
        SgjpConfig {
            h: 3,
            threshold: 3,
            k: 10,
            k_min: 5,
        }
    }
}

/// Segments every post and pools identical segments across posts. The
/// result is ordered by word sequence.
pub fn window_segments(batch: &WindowBatch, h: usize, model: &impl PhraseModel) -> Vec<Segment> {
    let mut pooled: BTreeMap<Vec<String>, Segment> = BTreeMap::new();
    for post in &batch.posts {
        let words = post.words();
        for span in segment_post(words, h, model) {
            let key = words[span.start..span.end].to_vec();
            pooled
                .entry(key.clone())
                .or_insert_with(|| Segment {
                    words: key,
                    stickiness: span.stickiness,
                    post_ids: BTreeSet::new(),
                })
                .post_ids
                .insert(post.id.clone());
        }
    }
    pooled.into_values().collect()
}

/// Detects topics in one window. Clusters holding a single segment are
/// dropped: a lone phrase with no related phrase is not a topic.
pub fn sgjp_detect(batch: &WindowBatch, cfg: &SgjpConfig, model: &impl PhraseModel) -> Vec<Topic> {
    let segments: Vec<Segment> = window_segments(batch, cfg.h, model)
        .into_iter()
        .filter(|s| s.post_ids.len() >= cfg.threshold.max(1))
        .collect();
    let mut graph = SimilarityGraph::new(segments.len());
    for i in 0..segments.len() {
        for j in i + 1..segments.len() {
            graph.add_edge(i, j, jaccard(&segments[i].post_ids, &segments[j].post_ids));
        }
    }
    let labels = jarvis_patrick(&graph, cfg.k, cfg.k_min);
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut clusters: Vec<Vec<&Segment>> = vec![Vec::new(); k];
    for (seg, &l) in segments.iter().zip(&labels) {
        clusters[l].push(seg);
    }
    clusters
        .into_iter()
        .filter(|c| c.len() >= 2)
        .map(|mut members| {
            // title: most widespread segments first
            members.sort_by(|a, b| b.post_ids.len().cmp(&a.post_ids.len()).then_with(|| b.stickiness.total_cmp(&a.stickiness)).then_with(|| a.words.cmp(&b.words)));
            let mut keywords: Vec<String> = Vec::new();
            for w in members.iter().flat_map(|s| &s.words) {
                if !keywords.contains(w) {
                    keywords.push(w.clone());
                }
            }
            let post_ids: BTreeSet<String> = members.iter().flat_map(|s| s.post_ids.iter().cloned()).collect();
            let score = post_ids.len() as f64;
            Topic::new(keywords, post_ids, score)
        })
        .collect()
}

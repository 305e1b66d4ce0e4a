//! Word-association detection: word pairs are ranked by association
//! gravity, the strongest pairs are kept, and connected pairs form topics.

use std::collections::{BTreeMap, BTreeSet};

use crate::stream::WindowBatch;
use crate::topic::Topic;

use super::HybridError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CattConfig {
    /// Damping factor for the reverse direction, in `[0, 1]`.
    pub delta: f64,
    /// Fraction of ranked pairs kept, in `(0, 0.5]`. Pairs tied with the
    /// weakest kept pair are kept as well.
    pub rate: f64,
}

impl Default for CattConfig {
    fn default() -> Self {
        CattConfig { delta: 0.5, rate: 0.2 }
    }
}

impl CattConfig {
    pub fn validate(&self) -> Result<(), HybridError> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(HybridError::InvalidParameter(format!("damping {} outside [0, 1]", self.delta)));
        }
        if !(self.rate > 0.0 && self.rate <= 0.5) {
            return Err(HybridError::InvalidParameter(format!("rate {} outside (0, 0.5]", self.rate)));
        }
        Ok(())
    }
}

/// `Cooc / f(y) + delta * Cooc / f(x)` from raw counts.
pub fn cimawa_counts(cooc: u64, fx: u64, fy: u64, delta: f64) -> Result<f64, HybridError> {
    if fx == 0 || fy == 0 {
        return Err(HybridError::ZeroFrequency);
    }
    Ok(cooc as f64 / fy as f64 + delta * cooc as f64 / fx as f64)
}

/// Gravity between two words: the product of both association directions.
pub fn agf_counts(cooc: u64, fx: u64, fy: u64, delta: f64) -> Result<f64, HybridError> {
    Ok(cimawa_counts(cooc, fx, fy, delta)? * cimawa_counts(cooc, fy, fx, delta)?)
}

/// Which posts of a window contain each word.
#[derive(Debug, Clone)]
pub struct PostIndex {
    posts: BTreeMap<String, BTreeSet<usize>>,
}

impl PostIndex {
    pub fn new(batch: &WindowBatch) -> Self {
        let mut posts: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        for (i, p) in batch.posts.iter().enumerate() {
            for w in p.words() {
                posts.entry(w.clone()).or_default().insert(i);
            }
        }
        PostIndex { posts }
    }

    /// Number of posts containing the word.
    pub fn frequency(&self, word: &str) -> u64 {
        self.posts.get(word).map_or(0, |s| s.len() as u64)
    }

    /// Number of posts containing both words, wherever they appear.
    pub fn cooccurrence(&self, x: &str, y: &str) -> u64 {
        match (self.posts.get(x), self.posts.get(y)) {
            (Some(a), Some(b)) => a.intersection(b).count() as u64,
            _ => 0,
        }
    }
}

pub fn cimawa(x: &str, y: &str, index: &PostIndex, delta: f64) -> Result<f64, HybridError> {
    cimawa_counts(index.cooccurrence(x, y), index.frequency(x), index.frequency(y), delta).map_err(|_| HybridError::UnseenWord(unseen(index, x, y)))
}

pub fn agf(x: &str, y: &str, index: &PostIndex, delta: f64) -> Result<f64, HybridError> {
    agf_counts(index.cooccurrence(x, y), index.frequency(x), index.frequency(y), delta).map_err(|_| HybridError::UnseenWord(unseen(index, x, y)))
}

fn unseen(index: &PostIndex, x: &str, y: &str) -> String {
    if index.frequency(x) == 0 { x } else { y }.to_string()
}

/// Every word pair appearing together in at least two posts, with its AGF,
/// strongest first (ties by words).
pub fn ranked_pairs(batch: &WindowBatch, delta: f64) -> Vec<(String, String, f64)> {
    let mut cooc: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    let mut df: BTreeMap<&str, u64> = BTreeMap::new();
    for post in &batch.posts {
        let words: BTreeSet<&str> = post.words().iter().map(String::as_str).collect();
        let words: Vec<&str> = words.into_iter().collect();
        for (i, &x) in words.iter().enumerate() {
            *df.entry(x).or_insert(0) += 1;
            for &y in &words[i + 1..] {
                *cooc.entry((x, y)).or_insert(0) += 1;
            }
        }
    }
    let mut pairs: Vec<(String, String, f64)> = cooc
        .into_iter()
        .filter(|&(_, c)| c >= 2)
        .map(|((x, y), c)| {
            let g = agf_counts(c, df[x], df[y], delta).expect("both words occur");
            (x.to_string(), y.to_string(), g)
        })
        .collect();
    pairs.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| (&a.0, &a.1).cmp(&(&b.0, &b.1))));
    pairs
}

pub fn catt_detect(batch: &WindowBatch, cfg: &CattConfig) -> Result<Vec<Topic>, HybridError> {
    cfg.validate()?;
    let mut pairs = ranked_pairs(batch, cfg.delta);
    let keep = ((pairs.len() as f64 * cfg.rate).ceil() as usize).min(pairs.len());
    // pairs tied with the last kept one stay too, so word names never decide the cut
    if keep > 0 {
        let cut = pairs[keep - 1].2;
        let keep = pairs.iter().take_while(|p| p.2 >= cut).count();
        pairs.truncate(keep);
    }

    // connected components over the kept pairs
    let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
    for (x, y, _) in &pairs {
        let next = ids.len();
        ids.entry(x).or_insert(next);
        let next = ids.len();
        ids.entry(y).or_insert(next);
    }
    let mut parent: Vec<usize> = (0..ids.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut strength = vec![0.0; ids.len()];
    for (x, y, g) in &pairs {
        let (a, b) = (ids[x.as_str()], ids[y.as_str()]);
        strength[a] += g;
        strength[b] += g;
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut components: BTreeMap<usize, Vec<(&str, f64)>> = BTreeMap::new();
    for (&w, &i) in &ids {
        let root = find(&mut parent, i);
        components.entry(root).or_default().push((w, strength[i]));
    }

    let topics = components
        .into_values()
        .map(|mut words| {
            words.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            let vocab: BTreeSet<&str> = words.iter().map(|w| w.0).collect();
            let post_ids: BTreeSet<String> = batch
                .posts
                .iter()
                .filter(|p| p.words().iter().map(String::as_str).filter(|w| vocab.contains(w)).collect::<BTreeSet<_>>().len() >= 2)
                .map(|p| p.id.clone())
                .collect();
            let score = words.iter().map(|w| w.1).sum::<f64>() / 2.0;
            Topic::new(words.into_iter().map(|w| w.0.to_string()).collect(), post_ids, score)
        })
        .collect();
    Ok(topics)
}

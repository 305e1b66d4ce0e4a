//! Pattern-clustering detection with topic continuity. Frequent patterns
//! are mined at a very low support, the highest-utility ones are kept, and
//! each is either attached to a topic of the previous window (nearest
//! neighbours over word profiles) or grouped with the other unattached
//! patterns into new topics by modularity.

use std::collections::{BTreeMap, BTreeSet};

use crate::clustering::{knn_classify, newman_communities, SimilarityGraph};
use crate::fp::{fp_growth_bounded, transactions, Pattern, UtilityTable};
use crate::stream::{Post, WindowBatch};
use crate::topic::{rank_title_words, Topic};

use super::jaccard;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FhknConfig {
    /// Support threshold as a fraction of window posts; never below 2 posts.
    pub min_support_rate: f64,
    pub max_pattern_len: usize,
    /// Patterns kept after utility ranking.
    pub top_k: usize,
    pub knn_k: usize,
    /// Lowest cosine similarity that still attaches a pattern to an old topic.
    pub tau: f64,
    /// A connected group of new patterns is split into communities only
    /// when the split reaches this modularity within the group.
    pub min_split_modularity: f64,
    pub title_words: usize,
}

impl Default for FhknConfig {
    fn default() -> Self {
        FhknConfig {
            min_support_rate: 0.001,
            max_pattern_len: 5,
            top_k: 100,
            knn_k: 3,
            tau: 0.5,
            min_split_modularity: 0.3,
            title_words: 5,
        }
    }
}

/// Where a topic came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TopicOrigin {
    /// Continues the remembered topic with this id.
    Coherent(u64),
    /// New in this window; the id is fresh.
    Emerging(u64),
}

impl TopicOrigin {
    pub fn id(self) -> u64 {
        match self {
            TopicOrigin::Coherent(id) | TopicOrigin::Emerging(id) => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct MemoryEntry {
    topic: u64,
    profile: BTreeMap<String, f64>,
}

/// The patterns of the previous window, each tagged with the topic it
/// ended up in. Holds at most `top_k` patterns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoherentTopicMemory {
    entries: Vec<MemoryEntry>,
    next_id: u64,
}

impl CoherentTopicMemory {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Ids of the remembered topics.
    pub fn topics(&self) -> BTreeSet<u64> {
        self.entries.iter().map(|e| e.topic).collect()
    }
}

/// Support threshold `max(2, ceil(rate * posts))`.
pub fn fhkn_min_support(n_posts: usize, rate: f64) -> u64 {
    ((rate * n_posts as f64).ceil() as u64).max(2)
}

/// Multi-word patterns ranked by utility, where a word's unit utility is
/// its frequency in the window. Ties go to higher support, then to the
/// lexicographically smaller itemset.
pub fn top_utility_patterns(batch: &WindowBatch, cfg: &FhknConfig) -> Vec<Pattern> {
    let txs = transactions(batch);
    let min_support = fhkn_min_support(batch.len(), cfg.min_support_rate);
    let patterns = fp_growth_bounded(&txs, min_support, Some(cfg.max_pattern_len));
    let position: BTreeMap<&str, usize> = txs.iter().enumerate().map(|(i, t)| (t.post_id.as_str(), i)).collect();
    let table = UtilityTable::new(txs.clone(), batch.tf.clone());
    let mut ranked: Vec<Pattern> = patterns
        .into_iter()
        .filter(|p| p.items.len() >= 2)
        .map(|mut p| {
            let u: u64 = p.post_ids.iter().map(|id| p.items.iter().map(|w| table.utility(w, position[id.as_str()])).sum::<u64>()).sum();
            p.utility = Some(u);
            p
        })
        .collect();
    ranked.sort_by(|a, b| b.utility.cmp(&a.utility).then_with(|| b.support.cmp(&a.support)).then_with(|| a.items.cmp(&b.items)));
    ranked.truncate(cfg.top_k);
    ranked
}

/// Word counts over the posts that contain the pattern.
fn profile(pattern: &Pattern, posts: &BTreeMap<&str, &Post>) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for id in &pattern.post_ids {
        for w in posts[id.as_str()].words() {
            *out.entry(w.clone()).or_insert(0.0) += 1.0;
        }
    }
    out
}

/// Column index for every word of the given profiles.
fn vocabulary<'a>(profiles: impl Iterator<Item = &'a BTreeMap<String, f64>>) -> BTreeMap<&'a str, usize> {
    let words: BTreeSet<&str> = profiles.flat_map(|p| p.keys().map(String::as_str)).collect();
    words.into_iter().enumerate().map(|(i, w)| (w, i)).collect()
}

fn dense(vocab: &BTreeMap<&str, usize>, profile: &BTreeMap<String, f64>) -> Vec<f64> {
    let mut v = vec![0.0; vocab.len()];
    for (w, c) in profile {
        v[vocab[w.as_str()]] = *c;
    }
    v
}

/// Community per node. Each connected component is one community unless
/// its best modularity split scores at least `min_q` on its own; a whole
/// component always scores 0, so any structure at all would split it.
fn emerging_communities(graph: &SimilarityGraph, min_q: f64) -> Vec<usize> {
    let n = graph.node_count();
    let mut component = vec![usize::MAX; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let c = members.len();
        let mut stack = vec![start];
        let mut nodes = Vec::new();
        component[start] = c;
        while let Some(u) = stack.pop() {
            nodes.push(u);
            for (v, _) in graph.neighbors(u) {
                if component[v] == usize::MAX {
                    component[v] = c;
                    stack.push(v);
                }
            }
        }
        nodes.sort_unstable();
        members.push(nodes);
    }
    let mut labels = vec![0; n];
    let mut next = 0;
    for nodes in members {
        let local: BTreeMap<usize, usize> = nodes.iter().enumerate().map(|(i, &u)| (u, i)).collect();
        let mut sub = SimilarityGraph::new(nodes.len());
        for &u in &nodes {
            for (v, w) in graph.neighbors(u) {
                if u < v {
                    sub.add_edge(local[&u], local[&v], w);
                }
            }
        }
        let (split, q) = newman_communities(&sub);
        let split = if q >= min_q { split } else { vec![0; nodes.len()] };
        let parts = split.iter().max().map_or(0, |m| m + 1);
        for (&u, &l) in nodes.iter().zip(&split) {
            labels[u] = next + l;
        }
        next += parts;
    }
    labels
}

/// Detects topics in one window given the previous window's memory.
/// Returns the topics with their origin and the memory for the next window.
pub fn fhkn_detect(batch: &WindowBatch, memory: &CoherentTopicMemory, cfg: &FhknConfig) -> (Vec<(Topic, TopicOrigin)>, CoherentTopicMemory) {
    let patterns = top_utility_patterns(batch, cfg);
    let posts: BTreeMap<&str, &Post> = batch.posts.iter().map(|p| (p.id.as_str(), p)).collect();
    let profiles: Vec<BTreeMap<String, f64>> = patterns.iter().map(|p| profile(p, &posts)).collect();

    // coherent: nearest remembered patterns vote for their topic
    let mut origin: Vec<Option<TopicOrigin>> = {
        let vocab = vocabulary(profiles.iter().chain(memory.entries.iter().map(|e| &e.profile)));
        let exemplars: Vec<(Vec<f64>, u64)> = memory.entries.iter().map(|e| (dense(&vocab, &e.profile), e.topic)).collect();
        profiles
            .iter()
            .map(|p| knn_classify(&dense(&vocab, p), &exemplars, cfg.knn_k, cfg.tau).map(TopicOrigin::Coherent))
            .collect()
    };

    // emerging: modularity communities among the rest, linked by shared posts
    let rest: Vec<usize> = (0..patterns.len()).filter(|&i| origin[i].is_none()).collect();
    let mut graph = SimilarityGraph::new(rest.len());
    for a in 0..rest.len() {
        for b in a + 1..rest.len() {
            graph.add_edge(a, b, jaccard(&patterns[rest[a]].post_ids, &patterns[rest[b]].post_ids));
        }
    }
    let communities = emerging_communities(&graph, cfg.min_split_modularity);
    let mut next_id = memory.next_id;
    let mut fresh: BTreeMap<usize, u64> = BTreeMap::new();
    for (&i, &c) in rest.iter().zip(&communities) {
        let id = *fresh.entry(c).or_insert_with(|| {
            next_id += 1;
            next_id - 1
        });
        origin[i] = Some(TopicOrigin::Emerging(id));
    }

    let mut groups: BTreeMap<TopicOrigin, Vec<usize>> = BTreeMap::new();
    for (i, o) in origin.iter().enumerate() {
        groups.entry(o.expect("every pattern is labelled")).or_default().push(i);
    }
    let doc_freq = batch.doc_frequencies();
    let topics = groups
        .iter()
        .map(|(&o, members)| {
            let post_ids: BTreeSet<String> = members.iter().flat_map(|&i| patterns[i].post_ids.iter().cloned()).collect();
            let words: BTreeSet<String> = members.iter().flat_map(|&i| patterns[i].items.iter().cloned()).collect();
            let group: Vec<&Post> = post_ids.iter().map(|id| posts[id.as_str()]).collect();
            let keywords = rank_title_words(&group, &doc_freq, batch.len(), cfg.title_words, Some(&words));
            let score = post_ids.len() as f64;
            (Topic::new(keywords, post_ids, score), o)
        })
        .collect();

    let entries = profiles
        .into_iter()
        .zip(&origin)
        .map(|(profile, o)| MemoryEntry {
            topic: o.expect("every pattern is labelled").id(),
            profile,
        })
        .collect();
    (topics, CoherentTopicMemory { entries, next_id })
}

/// Runs [`fhkn_detect`] window after window, carrying the memory along.
#[derive(Debug, Clone, Default)]
pub struct FhknDetector {
    pub config: FhknConfig,
    memory: CoherentTopicMemory,
}

impl FhknDetector {
    pub fn new(config: FhknConfig) -> Self {
        FhknDetector {
            config,
            memory: CoherentTopicMemory::default(),
        }
    }

    pub fn memory(&self) -> &CoherentTopicMemory {
        &self.memory
    }

    pub fn detect(&mut self, batch: &WindowBatch) -> Vec<Topic> {
        let (topics, memory) = fhkn_detect(batch, &self.memory, &self.config);
        self.memory = memory;
        topics.into_iter().map(|(t, _)| t).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const QUAKE: [&str; 5] = ["quake", "rescue", "rubble", "tremor", "aftershock"];
    const MATCH: [&str; 5] = ["goal", "striker", "league", "referee", "penalty"];

    /// Posts of 4 of the 5 topic words plus a filler word of their own.
    fn posts(topic: &[&str], prefix: &str, n: usize, rng: &mut ChaCha8Rng) -> Vec<Post> {
        (0..n)
            .map(|i| {
                let mut words: Vec<String> = Vec::new();
                while words.len() < 4 {
                    let w = topic[rng.random_range(0..topic.len())].to_string();
                    if !words.contains(&w) {
                        words.push(w);
                    }
                }
                words.push(format!("filler{prefix}{i}"));
                Post::with_tokens(format!("{prefix}{i}"), 0, &words)
            })
            .collect()
    }

    fn window(topics: &[(&[&str], &str)], seed: u64) -> WindowBatch {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        WindowBatch::from_posts(topics.iter().flat_map(|(t, p)| posts(t, p, 20, &mut rng)).collect())
    }

    fn pure(t: &Topic) -> bool {
        let first = t.post_ids.iter().next().unwrap().chars().next().unwrap();
        t.post_ids.iter().all(|p| p.starts_with(first))
    }

    #[test]
    fn weak_splits_are_not_taken() {
        // two triangles joined by one edge: best split has Q = 5/14
        let mut g = SimilarityGraph::new(7);
        for (u, v) in [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)] {
            g.add_edge(u, v, 1.0);
        }
        let split = emerging_communities(&g, 0.3);
        assert_eq!(&split[..6], [0, 0, 0, 1, 1, 1]);
        assert_eq!(split[6], 2, "isolated node is its own group");
        let whole = emerging_communities(&g, 0.4);
        assert_eq!(&whole[..6], [0; 6]);
    }

    #[test]
    fn support_floor() {
        assert_eq!(fhkn_min_support(100, 0.001), 2);
        assert_eq!(fhkn_min_support(5000, 0.001), 5);
        assert_eq!(fhkn_min_support(5001, 0.001), 6);
    }

    #[test]
    fn utility_is_summed_word_frequency() {
        let batch = WindowBatch::from_posts(vec![
            Post::with_tokens("1", 0, &["a", "b", "a"]),
            Post::with_tokens("2", 0, &["a", "b"]),
            Post::with_tokens("3", 0, &["a", "c"]),
        ]);
        let top = top_utility_patterns(&batch, &FhknConfig::default());
        // only {a, b} reaches support 2; tf(a) = 4, tf(b) = 2
        assert_eq!(top.len(), 1);
        assert_eq!(top[0].items, ["a", "b"]);
        assert_eq!(top[0].utility, Some((2 * 4 + 2) + (4 + 2)));
    }

    #[test]
    fn cold_start_finds_two_emerging_topics() {
        let batch = window(&[(&QUAKE, "a"), (&MATCH, "b")], 1);
        let (topics, memory) = fhkn_detect(&batch, &CoherentTopicMemory::default(), &FhknConfig::default());
        assert_eq!(topics.len(), 2, "{topics:?}");
        assert!(topics.iter().all(|(t, o)| matches!(o, TopicOrigin::Emerging(_)) && pure(t)));
        assert!(memory.len() <= FhknConfig::default().top_k);
        assert_eq!(memory.topics().len(), 2);
    }

    #[test]
    fn repeated_topic_is_coherent() {
        let cfg = FhknConfig::default();
        let first = window(&[(&QUAKE, "a")], 2);
        let (t1, memory) = fhkn_detect(&first, &CoherentTopicMemory::default(), &cfg);
        assert_eq!(t1.len(), 1);
        let old_id = t1[0].1.id();

        let second = window(&[(&QUAKE, "a"), (&MATCH, "b")], 3);
        let (t2, memory) = fhkn_detect(&second, &memory, &cfg);
        let quake = t2.iter().find(|(t, _)| t.keywords.iter().any(|w| QUAKE.contains(&w.as_str()))).unwrap();
        assert_eq!(quake.1, TopicOrigin::Coherent(old_id));
        let game = t2.iter().find(|(t, _)| t.keywords.iter().any(|w| MATCH.contains(&w.as_str()))).unwrap();
        assert!(matches!(game.1, TopicOrigin::Emerging(id) if id != old_id));
        assert!(pure(&quake.0) && pure(&game.0));
        assert!(memory.len() <= cfg.top_k);
    }

    #[test]
    fn detector_threads_memory() {
        let mut det = FhknDetector::new(FhknConfig { top_k: 10, ..FhknConfig::default() });
        det.detect(&window(&[(&QUAKE, "a")], 4));
        assert!(det.memory().len() <= 10);
        assert!(!det.memory().is_empty());
        let again = det.detect(&window(&[(&QUAKE, "a")], 5));
        assert_eq!(again.len(), 1);
    }

    #[test]
    fn empty_window_clears_memory() {
        let (topics, memory) = fhkn_detect(&WindowBatch::from_posts(Vec::new()), &CoherentTopicMemory::default(), &FhknConfig::default());
        assert!(topics.is_empty());
        assert!(memory.is_empty());
    }
}

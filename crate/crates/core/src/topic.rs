use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::stream::Post;

/// A detected topic: a ranked keyword title and the posts it covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topic {
    pub keywords: Vec<String>,
    pub post_ids: BTreeSet<String>,
    pub score: f64,
}

impl Topic {
    pub fn new(keywords: Vec<String>, post_ids: BTreeSet<String>, score: f64) -> Self {
        Topic {
            keywords,
            post_ids,
            score,
        }
    }
}

/// Orders topics by descending score, then by title, so that output files do
/// not depend on hash or thread ordering.
pub fn sort_topics(topics: &mut [Topic]) {
    topics.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.keywords.cmp(&b.keywords))
            .then_with(|| a.post_ids.cmp(&b.post_ids))
    });
}

/// Ranks words of a group of posts by `frequency in group * ln(N / df)`,
/// where `df` comes from `doc_freq` over a window of `n_docs` posts. Words
/// present in every post score zero and are dropped unless nothing else is
/// left. When `allowed` is given, only those words are ranked.
pub fn rank_title_words(
    group: &[&Post],
    doc_freq: &BTreeMap<String, u64>,
    n_docs: usize,
    limit: usize,
    allowed: Option<&BTreeSet<String>>,
) -> Vec<String> {
    let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
    for post in group {
        for w in post.words() {
            if allowed.is_none_or(|a| a.contains(w)) {
                *freq.entry(w.as_str()).or_insert(0) += 1;
            }
        }
    }
    let mut scored: Vec<(&str, u64, f64)> = freq
        .into_iter()
        .map(|(w, f)| {
            let df = doc_freq.get(w).copied().unwrap_or(1).max(1);
            (w, f, f as f64 * (n_docs as f64 / df as f64).ln())
        })
        .collect();
    if scored.iter().any(|s| s.2 > 0.0) {
        scored.retain(|s| s.2 > 0.0);
        scored.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| a.0.cmp(b.0)));
    } else {
        scored.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    }
    scored.into_iter().take(limit).map(|s| s.0.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(id: &str, words: &[&str]) -> Post {
        Post::with_tokens(id, 0, words)
    }

    #[test]
    fn sorting_is_total() {
        let mut topics = vec![
            Topic::new(vec!["b".into()], BTreeSet::new(), 1.0),
            Topic::new(vec!["a".into()], BTreeSet::new(), 1.0),
            Topic::new(vec!["z".into()], BTreeSet::new(), 2.0),
        ];
        sort_topics(&mut topics);
        let order: Vec<&str> = topics.iter().map(|t| t.keywords[0].as_str()).collect();
        assert_eq!(order, ["z", "a", "b"]);
    }

    #[test]
    fn title_ranking_prefers_distinctive_words() {
        let posts = [
            post("1", &["common", "quake", "city"]),
            post("2", &["common", "quake"]),
            post("3", &["common", "football"]),
            post("4", &["common", "football"]),
        ];
        let df: BTreeMap<String, u64> = [("common", 4), ("quake", 2), ("city", 1), ("football", 2)]
            .into_iter()
            .map(|(w, c)| (w.to_string(), c))
            .collect();
        let group = [&posts[0], &posts[1]];
        // quake: 2 ln 2 = 1.386, city: 1 ln 4 = 1.386, common: 0
        assert_eq!(rank_title_words(&group, &df, 4, 5, None), ["city", "quake"]);
        let allowed: BTreeSet<String> = ["quake".to_string()].into();
        assert_eq!(rank_title_words(&group, &df, 4, 5, Some(&allowed)), ["quake"]);
        assert_eq!(rank_title_words(&[&posts[2]], &df, 1, 5, None), ["common", "football"]);
    }
}

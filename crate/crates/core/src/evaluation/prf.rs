//! Topic-level precision, recall and F-measure.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::topic::Topic;

use super::EvalError;

/// Share of a topic's title words that must be class keywords.
pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
    pub matched_topics: usize,
    pub topics: usize,
    pub covered_classes: usize,
    pub classes: usize,
}

impl Prf {
    /// Builds the scores from counts; F is 0 when P + R is 0.
    pub fn from_counts(matched_topics: usize, topics: usize, covered_classes: usize, classes: usize) -> Self {
        let precision = if topics == 0 { 0.0 } else { matched_topics as f64 / topics as f64 };
        let recall = if classes == 0 { 0.0 } else { covered_classes as f64 / classes as f64 };
        let f = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        Prf {
            precision,
            recall,
            f,
            matched_topics,
            topics,
            covered_classes,
            classes,
        }
    }

    /// Pools counts over several windows.
    pub fn pooled<'a>(parts: impl IntoIterator<Item = &'a Prf>) -> Prf {
        let (mut m, mut t, mut c, mut k) = (0, 0, 0, 0);
        for p in parts {
            m += p.matched_topics;
            t += p.topics;
            c += p.covered_classes;
            k += p.classes;
        }
        Prf::from_counts(m, t, c, k)
    }
}

/// A topic matches a class when at least `threshold` of its title words are
/// among the class keywords. Precision counts matching topics, recall
/// counts classes matched by some topic.
pub fn topic_prf(topics: &[Topic], classes: &BTreeMap<String, BTreeSet<String>>, threshold: f64) -> Result<Prf, EvalError> {
    if classes.is_empty() {
        return Err(EvalError::NoGoldenClasses);
    }
    let mut covered: BTreeSet<&str> = BTreeSet::new();
    let mut matched = 0;
    for topic in topics {
        let title: BTreeSet<&String> = topic.keywords.iter().collect();
        let mut any = false;
        for (class, keywords) in classes {
            let hits = title.iter().filter(|w| keywords.contains(**w)).count();
            if !title.is_empty() && hits as f64 >= threshold * title.len() as f64 {
                covered.insert(class);
                any = true;
            }
        }
        matched += usize::from(any);
    }
    Ok(Prf::from_counts(matched, topics.len(), covered.len(), classes.len()))
}

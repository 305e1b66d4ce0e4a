//! FP-growth with a per-window dynamic minimum support.

use std::collections::{BTreeMap, HashSet, VecDeque};

use super::{fp_growth, transactions, FpError, Pattern};
use crate::stream::WindowBatch;
use crate::topic::Topic;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowSize {
    Small,
    Large,
}

/// A window is small when it holds fewer than a third of the mean post
/// count of the preceding windows. Without history it is large.
pub fn classify_window(n_posts: usize, history: &[usize]) -> WindowSize {
    if history.is_empty() {
        return WindowSize::Large;
    }
    // n < sum / (3 * len), in integers
    let sum: usize = history.iter().sum();
    if 3 * history.len() * n_posts < sum {
        WindowSize::Small
    } else {
        WindowSize::Large
    }
}

fn median(values: &mut [u64]) -> f64 {
    values.sort_unstable();
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2] as f64
    } else {
        (values[n / 2 - 1] + values[n / 2]) as f64 / 2.0
    }
}

/// `avg(TF) · median(TF)` for large windows and `avg(TF) · 2·median(TF)` for
/// small ones, before rounding.
pub fn dynamic_support(tf: &BTreeMap<String, u64>, size: WindowSize) -> Result<f64, FpError> {
    if tf.is_empty() {
        return Err(FpError::EmptyWindow);
    }
    let mut values: Vec<u64> = tf.values().copied().collect();
    let avg = values.iter().sum::<u64>() as f64 / values.len() as f64;
    let med = median(&mut values);
    Ok(match size {
        WindowSize::Large => avg * med,
        WindowSize::Small => avg * (2.0 * med),
    })
}

/// [`dynamic_support`] rounded up to a post count.
pub fn dynamic_min_support(tf: &BTreeMap<String, u64>, size: WindowSize) -> Result<u64, FpError> {
    dynamic_support(tf, size).map(|s| s.ceil() as u64)
}

/// Patterns with no frequent strict superset.
pub fn maximal_patterns(patterns: &[Pattern]) -> Vec<Pattern> {
    let mut covered: HashSet<Vec<String>> = HashSet::new();
    for p in patterns {
        for skip in 0..p.items.len() {
            let mut sub = p.items.clone();
            sub.remove(skip);
            covered.insert(sub);
        }
    }
    patterns.iter().filter(|p| !covered.contains(&p.items)).cloned().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DsfgConfig {
    /// How many preceding windows define the "average window".
    pub history_len: usize,
}

impl Default for DsfgConfig {
    fn default() -> Self {
        DsfgConfig { history_len: 5 }
    }
}

/// Stateful detector: remembers recent window sizes.
#[derive(Debug, Clone, Default)]
pub struct DsfgDetector {
    pub config: DsfgConfig,
    history: VecDeque<usize>,
}

impl DsfgDetector {
    pub fn new(config: DsfgConfig) -> Self {
        DsfgDetector {
            config,
            history: VecDeque::new(),
        }
    }

    pub fn detect(&mut self, batch: &WindowBatch) -> Vec<Topic> {
        let history: Vec<usize> = self.history.iter().copied().collect();
        self.history.push_back(batch.len());
        while self.history.len() > self.config.history_len.max(1) {
            self.history.pop_front();
        }
        if batch.tf.is_empty() {
            return Vec::new();
        }
        let size = classify_window(batch.len(), &history);
        let min_support = dynamic_min_support(&batch.tf, size).expect("tf is nonempty");
        let patterns = fp_growth(&transactions(batch), min_support);

        maximal_patterns(&patterns)
            .into_iter()
            .map(|p| {
                let mut keywords = p.items.clone();
                keywords.sort_by(|a, b| batch.tf[b].cmp(&batch.tf[a]).then_with(|| a.cmp(b)));
                Topic::new(keywords, p.post_ids, p.support as f64)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::Post;

    fn tf(values: &[u64]) -> BTreeMap<String, u64> {
        values.iter().enumerate().map(|(i, &v)| (format!("w{i}"), v)).collect()
    }

    #[test]
    fn window_classification() {
        assert_eq!(classify_window(90, &[300, 300]), WindowSize::Small);
        assert_eq!(classify_window(100, &[300]), WindowSize::Large);
        assert_eq!(classify_window(99, &[300]), WindowSize::Small);
        assert_eq!(classify_window(1, &[]), WindowSize::Large);
    }

    #[test]
    fn support_formulas() {
        let t = tf(&[2, 3, 4, 5, 6]);
        assert_eq!(dynamic_support(&t, WindowSize::Large).unwrap(), 16.0);
        assert_eq!(dynamic_support(&t, WindowSize::Small).unwrap(), 32.0);
        assert_eq!(dynamic_support(&tf(&[5]), WindowSize::Large).unwrap(), 25.0);
        assert_eq!(dynamic_support(&BTreeMap::new(), WindowSize::Large), Err(FpError::EmptyWindow));
        // avg 2.5 × median 2.5 = 6.25 -> 7 posts
        assert_eq!(dynamic_min_support(&tf(&[1, 2, 3, 4]), WindowSize::Large).unwrap(), 7);
    }

    fn planted() -> WindowBatch {
        let mut posts = Vec::new();
        for i in 0..6 {
            posts.push(Post::with_tokens(format!("x{i}"), 0, &["x1", "x2", &format!("fx{i}")]));
            posts.push(Post::with_tokens(format!("y{i}"), 0, &["y1", "y2", &format!("fy{i}")]));
        }
        WindowBatch::from_posts(posts)
    }

    #[test]
    fn planted_topics_are_maximal_patterns() {
        let batch = planted();
        // avg = 36 / 16 = 2.25, median = 1 -> support 3
        assert_eq!(dynamic_min_support(&batch.tf, WindowSize::Large).unwrap(), 3);
        let mut topics = DsfgDetector::default().detect(&batch);
        topics.sort_by(|a, b| a.keywords.cmp(&b.keywords));
        let titles: Vec<_> = topics.iter().map(|t| t.keywords.clone()).collect();
        assert_eq!(titles, vec![vec!["x1", "x2"], vec!["y1", "y2"]]);
        assert!(topics.iter().all(|t| t.post_ids.len() == 6));
    }

    #[test]
    fn empty_batch_yields_nothing() {
        assert!(DsfgDetector::default().detect(&WindowBatch::from_posts(vec![])).is_empty());
    }

    #[test]
    fn uniform_tf_support_is_square() {
        let posts: Vec<Post> = (0..4).map(|i| Post::with_tokens(format!("p{i}"), 0, &["a", "b", "c"])).collect();
        let batch = WindowBatch::from_posts(posts);
        assert_eq!(dynamic_min_support(&batch.tf, WindowSize::Large).unwrap(), 16);
    }

    #[test]
    fn history_drives_small_window_rule() {
        let mut det = DsfgDetector::default();
        let big: Vec<Post> = (0..30).map(|i| Post::with_tokens(format!("b{i}"), 0, &["a", "b"])).collect();
        det.detect(&WindowBatch::from_posts(big));
        assert_eq!(det.history.len(), 1);
        let small: Vec<Post> = (0..3).map(|i| Post::with_tokens(format!("s{i}"), 0, &["a"])).collect();
        let history: Vec<usize> = det.history.iter().copied().collect();
        assert_eq!(classify_window(small.len(), &history), WindowSize::Small);
    }

    #[test]
    fn maximal_filter() {
        let p = |items: &[&str]| Pattern {
            items: items.iter().map(|s| s.to_string()).collect(),
            support: 1,
            utility: None,
            post_ids: Default::default(),
        };
        let all = vec![p(&["a"]), p(&["b"]), p(&["c"]), p(&["a", "b"])];
        let got: Vec<_> = maximal_patterns(&all).into_iter().map(|p| p.items).collect();
        assert_eq!(got, vec![vec!["c".to_string()], vec!["a".into(), "b".into()]]);
    }
}

//! Phrase cohesion scores and optimal post segmentation.

use crate::background::{AnchorModel, NgramModel};

use super::HybridError;

/// Priors a segmenter needs: how likely a phrase is in running text and
/// how likely it is to be used as a link anchor.
pub trait PhraseModel {
    /// `Pr(words)` for a phrase of one or more words.
    fn prior(&self, words: &[String]) -> f64;
    /// Anchor probability `Q(words)`, 0 when never an anchor.
    fn anchor(&self, words: &[String]) -> f64;
    /// Longest phrase the priors cover.
    fn max_len(&self) -> usize;
}

/// Background stores as a [`PhraseModel`].
#[derive(Debug, Clone, Copy)]
pub struct BackgroundPhrases<'a> {
    pub ngrams: &'a NgramModel,
    pub anchors: &'a AnchorModel,
}

impl PhraseModel for BackgroundPhrases<'_> {
    fn prior(&self, words: &[String]) -> f64 {
        // callers never exceed max_len, and phrases are never empty
        self.ngrams.probability(words).unwrap_or(0.0)
    }

    fn anchor(&self, words: &[String]) -> f64 {
        self.anchors.probability(words)
    }

    fn max_len(&self) -> usize {
        self.ngrams.n_max()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Length preference: `(n - 1) / n` for multiword segments, 1/3 for one word.
pub fn len_weight(n: usize) -> f64 {
    match n {
        0 => 0.0,
        1 => 1.0 / 3.0,
        n => (n - 1) as f64 / n as f64,
    }
}

/// Symmetric conditional probability in natural log: `Pr(s)^2` against the
/// mean product over every binary split of the phrase.
pub fn scp_with(phrase: &[String], model: &impl PhraseModel) -> Result<f64, HybridError> {
    let n = phrase.len();
    if n < 2 {
        return Err(HybridError::ScpSingleWord);
    }
    if n > model.max_len() {
        return Err(HybridError::PhraseTooLong { len: n, max: model.max_len() });
    }
    let p = model.prior(phrase);
    let mean = (1..n).map(|i| model.prior(&phrase[..i]) * model.prior(&phrase[i..])).sum::<f64>() / (n - 1) as f64;
    Ok((p * p / mean).ln())
}

pub fn scp(phrase: &[String], ngrams: &NgramModel) -> Result<f64, HybridError> {
    scp_with(
        phrase,
        &BackgroundPhrases {
            ngrams,
            anchors: &AnchorModel::default(),
        },
    )
}

/// Stickiness `Len(s) * e^Q(s) * Sig(SCP(s))`. A single word has no split,
/// so its cohesion term is `Sig(ln Pr(w))`.
pub fn stickiness_with(segment: &[String], model: &impl PhraseModel) -> Result<f64, HybridError> {
    let coherence = match segment.len() {
        0 => return Err(HybridError::EmptySegment),
        1 => model.prior(segment).ln(),
        _ => scp_with(segment, model)?,
    };
    Ok(len_weight(segment.len()) * model.anchor(segment).exp() * sigmoid(coherence))
}

pub fn stickiness(segment: &[String], anchors: &AnchorModel, ngrams: &NgramModel) -> Result<f64, HybridError> {
    stickiness_with(segment, &BackgroundPhrases { ngrams, anchors })
}

/// A run of consecutive words of one post.
#[derive(Debug, Clone, PartialEq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub stickiness: f64,
}

/// Splits a token sequence into consecutive segments of at most `h` words
/// (and at most the model's phrase length) maximising total stickiness.
/// Among equal totals the segmentation whose last split comes earliest wins,
/// applied from the end of the post backwards.
pub fn segment_post(words: &[String], h: usize, model: &impl PhraseModel) -> Vec<Span> {
    let n = words.len();
    let h = h.clamp(1, model.max_len().max(1));
    let mut best = vec![f64::NEG_INFINITY; n + 1];
    let mut back = vec![0usize; n + 1];
    best[0] = 0.0;
    for end in 1..=n {
        for start in end.saturating_sub(h)..end {
            let c = stickiness_with(&words[start..end], model).expect("segment length within model range");
            let total = best[start] + c;
            // strict comparison keeps the earliest start on ties
            if total > best[end] {
                best[end] = total;
                back[end] = start;
            }
        }
    }
    let mut spans = Vec::new();
    let mut end = n;
    while end > 0 {
        let start = back[end];
        spans.push(Span {
            start,
            end,
            stickiness: best[end] - best[start],
        });
        end = start;
    }
    spans.reverse();
    for s in &mut spans {
        s.stickiness = stickiness_with(&words[s.start..s.end], model).expect("segment length within model range");
    }
    spans
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    /// Explicit phrase priors; anything missing gets `floor`.
    struct TableModel {
        prior: HashMap<Vec<String>, f64>,
        anchor: HashMap<Vec<String>, f64>,
        floor: f64,
    }

    impl PhraseModel for TableModel {
        fn prior(&self, words: &[String]) -> f64 {
            self.prior.get(words).copied().unwrap_or(self.floor)
        }
        fn anchor(&self, words: &[String]) -> f64 {
            self.anchor.get(words).copied().unwrap_or(0.0)
        }
        fn max_len(&self) -> usize {
            5
        }
    }

    fn w(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn table(prior: &[(&str, f64)], anchor: &[(&str, f64)]) -> TableModel {
        TableModel {
            prior: prior.iter().map(|(p, v)| (w(p), *v)).collect(),
            anchor: anchor.iter().map(|(p, v)| (w(p), *v)).collect(),
            floor: 1e-6,
        }
    }

    #[test]
    fn length_weights() {
        assert_eq!(len_weight(1), 1.0 / 3.0);
        assert_eq!(len_weight(2), 0.5);
        assert_eq!(len_weight(4), 0.75);
    }

    #[test]
    fn scp_bigram_by_hand() {
        let m = table(&[("a b", 0.01), ("a", 0.1), ("b", 0.05)], &[]);
        let v = scp_with(&w("a b"), &m).unwrap();
        assert!((v - 0.02f64.ln()).abs() < 1e-9);
        assert!((v + 3.912).abs() < 1e-3);
    }

    #[test]
    fn scp_neutral_and_doubling() {
        let m = table(&[("a b", 0.02), ("a", 0.1), ("b", 0.004)], &[]);
        assert!(scp_with(&w("a b"), &m).unwrap().abs() < 1e-12);
        let doubled = table(&[("a b", 0.04), ("a", 0.1), ("b", 0.004)], &[]);
        let diff = scp_with(&w("a b"), &doubled).unwrap() - scp_with(&w("a b"), &m).unwrap();
        assert!((diff - 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn scp_rejects_single_words_and_long_phrases() {
        let m = table(&[], &[]);
        assert!(matches!(scp_with(&w("a"), &m), Err(HybridError::ScpSingleWord)));
        assert!(matches!(scp_with(&w("a b c d e f"), &m), Err(HybridError::PhraseTooLong { len: 6, max: 5 })));
    }

    #[test]
    fn scp_from_ngram_store() {
        let docs = [w("new york city"), w("new york"), w("old city")];
        let ngrams = crate::background::build_ngram_model(docs.iter(), 3).unwrap();
        // Pr(new york) = 2/4, Pr(new) = Pr(york) = 2/7
        let expected = (0.25 / (4.0 / 49.0f64)).ln();
        assert!((scp(&w("new york"), &ngrams).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn stickiness_with_neutral_factors() {
        let m = table(&[("a b", 0.02), ("a", 0.1), ("b", 0.004)], &[]);
        assert!((stickiness_with(&w("a b"), &m).unwrap() - 0.25).abs() < 1e-12);
        let linked = table(&[("a b", 0.02), ("a", 0.1), ("b", 0.004)], &[("a b", 0.5)]);
        assert!((stickiness_with(&w("a b"), &linked).unwrap() - 0.25 * 0.5f64.exp()).abs() < 1e-12);
        // unigram: 1/3 * Sig(ln 0.5) = 1/3 * 1/3
        let uni = table(&[("a", 0.5)], &[]);
        assert!((stickiness_with(&w("a"), &uni).unwrap() - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn h_one_gives_single_words() {
        let m = table(&[("a b", 0.5)], &[]);
        let spans = segment_post(&w("a b c"), 1, &m);
        assert_eq!(spans.iter().map(|s| (s.start, s.end)).collect::<Vec<_>>(), [(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn sticky_pair_stays_together() {
        let m = table(&[("a b", 0.05), ("a", 0.06), ("b", 0.07)], &[("a b", 0.3)]);
        let whole = stickiness_with(&w("a b"), &m).unwrap();
        let split = stickiness_with(&w("a"), &m).unwrap() + stickiness_with(&w("b"), &m).unwrap();
        assert!(whole > split);
        let spans = segment_post(&w("a b"), 3, &m);
        assert_eq!(spans.len(), 1);
        assert!((spans[0].stickiness - whole).abs() < 1e-15);
    }

    /// Every segmentation with parts of at most `h` words, by cut bitmask.
    fn exhaustive_best(words: &[String], h: usize, model: &TableModel) -> f64 {
        let n = words.len();
        let mut best = f64::NEG_INFINITY;
        for mask in 0u32..(1 << (n - 1)) {
            let mut cuts = vec![0];
            cuts.extend((1..n).filter(|i| mask & (1 << (i - 1)) != 0));
            cuts.push(n);
            if cuts.windows(2).any(|c| c[1] - c[0] > h) {
                continue;
            }
            let total: f64 = cuts.windows(2).map(|c| stickiness_with(&words[c[0]..c[1]], model).unwrap()).sum();
            best = best.max(total);
        }
        best
    }

    fn random_model(words: &[String], rng: &mut ChaCha8Rng) -> TableModel {
        let mut prior = HashMap::new();
        let mut anchor = HashMap::new();
        for i in 0..words.len() {
            for j in i + 1..=(i + 5).min(words.len()) {
                let p: f64 = 10f64.powf(-rng.random_range(0.5..6.0));
                prior.insert(words[i..j].to_vec(), p);
                if rng.random_bool(0.2) {
                    anchor.insert(words[i..j].to_vec(), rng.random::<f64>());
                }
            }
        }
        TableModel { prior, anchor, floor: 1e-7 }
    }

    #[test]
    fn dp_matches_exhaustive_segmentation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let n = rng.random_range(1..=8);
            // small vocabulary so repeated words and phrases occur
            let words: Vec<String> = (0..n).map(|_| format!("w{}", rng.random_range(0..4))).collect();
            let model = random_model(&words, &mut rng);
            let h = rng.random_range(1..=6);
            let spans = segment_post(&words, h, &model);
            let total: f64 = spans.iter().map(|s| s.stickiness).sum();
            let oracle = exhaustive_best(&words, h.min(5), &model);
            assert!((total - oracle).abs() < 1e-9, "{words:?} h={h}: dp {total} vs {oracle}");
            assert_eq!(spans.first().map(|s| s.start), Some(0));
            assert_eq!(spans.last().map(|s| s.end), Some(n));
            assert!(spans.windows(2).all(|p| p[0].end == p[1].start));
            assert!(spans.iter().all(|s| s.end - s.start <= h.min(5)));
        }
    }

    proptest! {
        #[test]
        fn stickiness_is_finite_and_positive(p in 1e-12f64..1.0, q in 0.0f64..1.0, n in 1usize..=5) {
            let words: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
            let model = TableModel { prior: HashMap::new(), anchor: [(words.clone(), q)].into(), floor: p };
            let c = stickiness_with(&words, &model).unwrap();
            prop_assert!(c.is_finite() && c > 0.0);
        }
    }
}

//! Detectors that mine patterns first and then cluster them.

mod catt;
mod fhkn;
mod segment;
mod sgjp;

use std::collections::BTreeSet;

pub use catt::{agf, agf_counts, catt_detect, cimawa, cimawa_counts, ranked_pairs, CattConfig, PostIndex};
pub use fhkn::{fhkn_detect, fhkn_min_support, top_utility_patterns, CoherentTopicMemory, FhknConfig, FhknDetector, TopicOrigin};
pub use segment::{len_weight, scp, scp_with, segment_post, sigmoid, stickiness, stickiness_with, BackgroundPhrases, PhraseModel, Span};
pub use sgjp::{sgjp_detect, window_segments, Segment, SgjpConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HybridError {
    #[error("cohesion is undefined for a single word")]
    ScpSingleWord,
    #[error("phrase of {len} words exceeds the {max}-word background model")]
    PhraseTooLong { len: usize, max: usize },
    #[error("empty segment")]
    EmptySegment,
    #[error("unseen word: {0}")]
    UnseenWord(String),
    #[error("unseen word: zero post frequency")]
    ZeroFrequency,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// `|a ∩ b| / |a ∪ b|`, 0 for two empty sets.
pub(crate) fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

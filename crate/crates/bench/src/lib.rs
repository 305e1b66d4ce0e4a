//! Inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topicstream_core::background::{build_ngram_model, AnchorModel, BackgroundModels, RefCorpusModel};
use topicstream_core::embeddings::{EmbeddingSource, EmbeddingTable};
use topicstream_core::fp::Transaction;
use topicstream_core::runner::Resources;
use topicstream_core::stream::{window_stream, WindowBatch, WindowSpec};
use topicstream_core::synth::{synthesize, SynthSpec};

/// `n` posts of 4 to 12 words drawn from a Zipf-like vocabulary.
pub fn zipf_transactions(n: usize, vocab: usize, seed: u64) -> Vec<Transaction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let len = rng.random_range(4..=12);
            let words: Vec<String> = (0..len)
                .map(|_| {
                    // inverse-CDF draw from 1/rank weights
                    let u: f64 = rng.random();
                    let rank = ((vocab as f64).powf(u) - 1.0) as usize;
                    format!("w{}", rank.min(vocab - 1))
                })
                .collect();
            Transaction::new(format!("p{i}"), &words)
        })
        .collect()
}

/// Points around `k` centers in `dim` dimensions.
pub fn blobs(k: usize, per: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..k).map(|_| (0..dim).map(|_| rng.random_range(-10.0..10.0)).collect()).collect();
    centers
        .iter()
        .flat_map(|c| (0..per).map(|_| c.iter().map(|x| x + rng.random_range(-1.0..1.0)).collect::<Vec<f64>>()).collect::<Vec<_>>())
        .collect()
}

/// Windows of a synthetic stream with every model a detector may need.
pub struct Stream {
    pub batches: Vec<WindowBatch>,
    pub resources: Resources,
}

pub fn stream(spec: &SynthSpec) -> Stream {
    let corpus = synthesize(spec).expect("valid spec");
    let ngrams = build_ngram_model(&corpus.background, 5).expect("n-gram order");
    let reference = RefCorpusModel::from_unigrams(&ngrams);
    let resources = Resources {
        background: Some(BackgroundModels {
            ngrams,
            anchors: AnchorModel::from_counts(corpus.anchors.iter().map(|(p, c)| (p.as_str(), *c))),
            reference,
        }),
        embeddings: Some(EmbeddingTable::from_vectors(EmbeddingSource::Other, corpus.embeddings.iter().cloned()).expect("consistent dimensions")),
        compounds: None,
    };
    let batches = window_stream(corpus.posts, WindowSpec { duration: spec.window_seconds }).expect("sorted stream");
    Stream { batches, resources }
}

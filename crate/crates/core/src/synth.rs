//! Synthetic planted-topic streams with their labels and background data.
//!
//! Each planted topic owns a disjoint core vocabulary, grouped into two-word
//! phrases. A topic post carries a random subset of its topic's phrases in
//! random order, separated by filler words drawn from a large shared
//! vocabulary, so fillers rarely repeat. Noise posts draw uniformly from a separate
//! noise vocabulary and belong to no class. Every window holds the same
//! number of posts per topic.
//!
//! The generator also writes what the model-backed detectors need: a
//! background corpus dominated by filler and noise words in which the
//! planted phrases occur now and then, anchor counts for the phrases, and
//! word vectors placing each topic's words around its own center.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::evaluation::{CatalogRecord, GoldenRecord, GoldenStandard};
use crate::stream::Post;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid generator setting: {0}")]
    InvalidSpec(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub topics: usize,
    /// Posts of each topic in each window.
    pub posts_per_topic: usize,
    pub windows: usize,
    /// Core words per topic; even, since words pair into phrases.
    pub core_words: usize,
    /// Phrases of its topic in each topic post.
    pub phrases_per_post: usize,
    pub filler_vocab: usize,
    pub noise_vocab: usize,
    pub fillers_per_post: usize,
    pub noise_post_len: usize,
    /// Fraction of all posts that are noise.
    pub noise_rate: f64,
    pub window_seconds: i64,
    pub embedding_dim: usize,
    pub background_docs: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            topics: 3,
            posts_per_topic: 30,
            windows: 5,
            core_words: 14,
            phrases_per_post: 4,
            filler_vocab: 2000,
            noise_vocab: 300,
            fillers_per_post: 3,
            noise_post_len: 8,
            noise_rate: 0.1,
            window_seconds: 3600,
            embedding_dim: 16,
            background_docs: 3000,
            seed: 42,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: &str| Err(SynthError::InvalidSpec(msg.into()));
        if self.topics == 0 || self.posts_per_topic == 0 || self.windows == 0 {
            return bad("topics, posts per topic and windows must be positive");
        }
        if self.core_words < 4 || self.core_words % 2 != 0 {
            return bad("core words per topic must be even and at least 4");
        }
        if self.phrases_per_post == 0 || 2 * self.phrases_per_post > self.core_words {
            return bad("phrases per post must be between 1 and half the core words");
        }
        if self.filler_vocab == 0 || self.noise_vocab == 0 || self.noise_post_len == 0 || self.embedding_dim == 0 {
            return bad("vocabulary sizes, noise post length and embedding dimension must be positive");
        }
        if !(0.0..1.0).contains(&self.noise_rate) {
            return bad("noise rate must be in [0, 1)");
        }
        if self.window_seconds <= 0 {
            return bad("window length must be positive");
        }
        Ok(())
    }

    /// Noise posts per window, so that they make up `noise_rate` of it.
    pub fn noise_posts_per_window(&self) -> usize {
        let planted = (self.topics * self.posts_per_topic) as f64;
        (planted / (1.0 - self.noise_rate)).round() as usize - self.topics * self.posts_per_topic
    }

    pub fn class_name(t: usize) -> String {
        format!("topic-{t}")
    }
}

/// Pronounceable word number `i` starting with `lead`, letters only so any
/// Latin tokenizer keeps it whole.
fn pseudo_word(lead: &str, mut i: usize) -> String {
    const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
    const VOWELS: &[u8] = b"aeiou";
    let base = CONSONANTS.len() * VOWELS.len();
    let mut w = lead.to_string();
    for n in 0.. {
        if n >= 2 && i == 0 {
            break;
        }
        let s = i % base;
        w.push(CONSONANTS[s / VOWELS.len()] as char);
        w.push(VOWELS[s % VOWELS.len()] as char);
        i /= base;
    }
    w
}

/// Everything one generator run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub posts: Vec<Post>,
    pub golden: GoldenStandard,
    /// Per topic, its phrases in order.
    pub phrases: Vec<Vec<[String; 2]>>,
    pub background: Vec<Vec<String>>,
    pub anchors: Vec<(String, u64)>,
    /// Sorted by word.
    pub embeddings: Vec<(String, Vec<f64>)>,
}

/// Paths written by [`SynthCorpus::write`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthFiles {
    pub posts: PathBuf,
    pub golden: PathBuf,
    pub catalog: PathBuf,
    pub background: PathBuf,
    pub anchors: PathBuf,
    pub embeddings: PathBuf,
}

impl SynthFiles {
    pub fn in_dir(dir: &Path) -> Self {
        SynthFiles {
            posts: dir.join("posts.jsonl"),
            golden: dir.join("golden.jsonl"),
            catalog: dir.join("catalog.jsonl"),
            background: dir.join("background.txt"),
            anchors: dir.join("anchors.tsv"),
            embeddings: dir.join("embeddings.vec"),
        }
    }
}

pub fn synthesize(spec: &SynthSpec) -> Result<SynthCorpus, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let core: Vec<Vec<String>> = (0..spec.topics).map(|t| (0..spec.core_words).map(|j| pseudo_word("ko", t * spec.core_words + j)).collect()).collect();
    let phrases: Vec<Vec<[String; 2]>> = core.iter().map(|words| words.chunks(2).map(|c| [c[0].clone(), c[1].clone()]).collect()).collect();
    let fillers: Vec<String> = (0..spec.filler_vocab).map(|i| pseudo_word("fi", i)).collect();
    let noise: Vec<String> = (0..spec.noise_vocab).map(|i| pseudo_word("nu", i)).collect();

    let n_noise = spec.noise_posts_per_window();
    let mut drafts: Vec<(i64, Vec<String>, Option<usize>)> = Vec::new();
    for w in 0..spec.windows {
        let start = w as i64 * spec.window_seconds;
        for t in 0..spec.topics {
            for _ in 0..spec.posts_per_topic {
                let ts = start + rng.random_range(0..spec.window_seconds);
                drafts.push((ts, topic_post(&phrases[t], spec.phrases_per_post, &fillers, spec.fillers_per_post, &mut rng), Some(t)));
            }
        }
        for _ in 0..n_noise {
            let ts = start + rng.random_range(0..spec.window_seconds);
            let words = (0..spec.noise_post_len).map(|_| noise[rng.random_range(0..noise.len())].clone()).collect();
            drafts.push((ts, words, None));
        }
    }
    // stable: equal timestamps keep generation order
    drafts.sort_by_key(|d| d.0);

    let width = drafts.len().to_string().len();
    let mut posts = Vec::with_capacity(drafts.len());
    let mut labels = Vec::with_capacity(drafts.len());
    for (i, (ts, words, class)) in drafts.into_iter().enumerate() {
        let id = format!("s{i:0width$}");
        labels.push(GoldenRecord {
            post_id: id.clone(),
            classes: class.map(SynthSpec::class_name).into_iter().collect(),
            score: None,
        });
        posts.push(Post::with_tokens(id, ts, &words));
    }
    let catalog = core.iter().enumerate().map(|(t, words)| CatalogRecord {
        class: SynthSpec::class_name(t),
        keywords: words.clone(),
    });
    let golden = GoldenStandard::new(labels, catalog);

    let background = background_corpus(spec, &phrases, &fillers, &noise, &mut rng);
    let mut anchors: BTreeMap<String, u64> = BTreeMap::new();
    for p in phrases.iter().flatten() {
        anchors.insert(p.join(" "), rng.random_range(3..20));
    }
    for _ in 0..spec.noise_vocab {
        let a = &noise[rng.random_range(0..noise.len())];
        let b = &noise[rng.random_range(0..noise.len())];
        *anchors.entry(format!("{a} {b}")).or_insert(0) += 1;
    }

    let embeddings = word_vectors(spec, &core, fillers.iter().chain(&noise), &mut rng);
    Ok(SynthCorpus {
        posts,
        golden,
        phrases,
        background,
        anchors: anchors.into_iter().collect(),
        embeddings,
    })
}

/// `n_phrases` distinct phrases, shuffled, with fillers between them.
fn topic_post(phrases: &[[String; 2]], n_phrases: usize, fillers: &[String], n_fillers: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut chosen: Vec<&[String; 2]> = phrases.iter().collect();
    chosen.shuffle(rng);
    chosen.truncate(n_phrases);
    let mut pieces: Vec<Vec<String>> = chosen.into_iter().map(|p| p.to_vec()).collect();
    for _ in 0..n_fillers {
        let at = rng.random_range(0..=pieces.len());
        pieces.insert(at, vec![fillers[rng.random_range(0..fillers.len())].clone()]);
    }
    pieces.concat()
}

fn background_corpus(spec: &SynthSpec, phrases: &[Vec<[String; 2]>], fillers: &[String], noise: &[String], rng: &mut ChaCha8Rng) -> Vec<Vec<String>> {
    let all_phrases: Vec<&[String; 2]> = phrases.iter().flatten().collect();
    (0..spec.background_docs)
        .map(|_| {
            let mut doc: Vec<String> = (0..10)
                .map(|_| {
                    if rng.random_bool(0.5) {
                        noise[rng.random_range(0..noise.len())].clone()
                    } else {
                        fillers[rng.random_range(0..fillers.len())].clone()
                    }
                })
                .collect();
            if rng.random_bool(0.1) {
                let p = all_phrases[rng.random_range(0..all_phrases.len())];
                let at = rng.random_range(0..=doc.len());
                doc.splice(at..at, p.iter().cloned());
            }
            doc
        })
        .collect()
}

/// Topic words sit near a random topic center of norm about
/// `2 sqrt(dim)`; every other word is a standard normal vector.
fn word_vectors<'a>(spec: &SynthSpec, core: &[Vec<String>], others: impl Iterator<Item = &'a String>, rng: &mut ChaCha8Rng) -> Vec<(String, Vec<f64>)> {
    let d = spec.embedding_dim;
    let mut gauss = |scale: f64| -> Vec<f64> { (0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect() };
    let mut out = Vec::new();
    for words in core {
        let center = gauss(2.0);
        for w in words {
            let v = gauss(0.3).iter().zip(&center).map(|(n, c)| c + n).collect();
            out.push((w.clone(), v));
        }
    }
    for w in others {
        out.push((w.clone(), gauss(1.0)));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

impl SynthCorpus {
    /// Writes all generated files into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<SynthFiles, SynthError> {
        let files = SynthFiles::in_dir(dir);
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| SynthError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io_err(dir))?;

        let mut text = String::new();
        for p in &self.posts {
            text.push_str(&serde_json::to_string(p).expect("posts serialize"));
            text.push('\n');
        }
        fs::write(&files.posts, text).map_err(io_err(&files.posts))?;

        self.golden.save(&files.golden, &files.catalog).map_err(|e| SynthError::Io {
            path: files.golden.clone(),
            source: io::Error::other(e.to_string()),
        })?;

        let text: String = self.background.iter().map(|d| d.join(" ") + "\n").collect();
        fs::write(&files.background, text).map_err(io_err(&files.background))?;
        let text: String = self.anchors.iter().map(|(p, c)| format!("{p}\t{c}\n")).collect();
        fs::write(&files.anchors, text).map_err(io_err(&files.anchors))?;

        let mut out = io::BufWriter::new(fs::File::create(&files.embeddings).map_err(io_err(&files.embeddings))?);
        let dim = self.embeddings.first().map_or(0, |e| e.1.len());
        let mut write = || -> io::Result<()> {
            writeln!(out, "{} {dim}", self.embeddings.len())?;
            for (w, v) in &self.embeddings {
                write!(out, "{w}")?;
                for x in v {
                    write!(out, " {x:.6}")?;
                }
                writeln!(out)?;
            }
            out.flush()
        };
        write().map_err(io_err(&files.embeddings))?;
        Ok(files)
    }
}

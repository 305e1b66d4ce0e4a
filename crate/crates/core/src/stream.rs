//! Post ingestion and landmark-window batching.
//!
//! Posts are read from JSON-lines files, sorted by timestamp and cut into
//! consecutive half-open intervals `[start, end)` of a fixed duration,
//! measured from the timestamp of the first post (the landmark).

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Fraction of malformed lines above which ingestion fails.
const MAX_MALFORMED_FRACTION: f64 = 0.10;

#[derive(Debug, thiserror::Error)]
pub enum StreamError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{malformed} of {total} lines malformed in {path} (lines {lines:?})")]
    TooManyMalformed {
        path: PathBuf,
        malformed: usize,
        total: usize,
        lines: Vec<usize>,
    },
    #[error("post {0} has no tokens; run preprocessing before windowing")]
    MissingTokens(String),
    #[error("window duration must be positive, got {0}")]
    InvalidDuration(i64),
}

/// One social-media message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    #[serde(rename = "ts")]
    pub timestamp: i64,
    #[serde(default)]
    pub channel: String,
    pub text: String,
    /// Filtered content words, filled by preprocessing.
    #[serde(skip)]
    pub tokens: Option<Vec<String>>,
}

impl Post {
    pub fn new(id: impl Into<String>, timestamp: i64, text: impl Into<String>) -> Self {
        Post {
            id: id.into(),
            timestamp,
            channel: String::new(),
            text: text.into(),
            tokens: None,
        }
    }

    /// Builds a post whose tokens are already known. Mostly useful in tests
    /// and generators.
    pub fn with_tokens<S: AsRef<str>>(id: impl Into<String>, timestamp: i64, words: &[S]) -> Self {
        let tokens: Vec<String> = words.iter().map(|w| w.as_ref().to_string()).collect();
        Post {
            id: id.into(),
            timestamp,
            channel: String::new(),
            text: tokens.join(" "),
            tokens: Some(tokens),
        }
    }

    pub fn words(&self) -> &[String] {
        self.tokens.as_deref().unwrap_or(&[])
    }
}

/// Result of reading a posts file.
#[derive(Debug, Default)]
pub struct Ingested {
    pub posts: Vec<Post>,
    /// 1-based line numbers that failed to parse or repeated an id.
    pub malformed_lines: Vec<usize>,
}

/// Reads a posts-jsonl file. Blank lines are ignored; malformed lines and
/// duplicate ids are skipped and reported, unless they exceed 10% of the
/// non-blank lines.
pub fn ingest_posts(path: &Path) -> Result<Ingested, StreamError> {
    let io_err = |source| StreamError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let reader = BufReader::new(file);

    let mut out = Ingested::default();
    let mut seen = HashSet::new();
    let mut total = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        match serde_json::from_str::<Post>(&line) {
            Ok(post) if !post.id.is_empty() && seen.insert(post.id.clone()) => out.posts.push(post),
            _ => out.malformed_lines.push(idx + 1),
        }
    }

    if total > 0 && out.malformed_lines.len() as f64 > MAX_MALFORMED_FRACTION * total as f64 {
        return Err(StreamError::TooManyMalformed {
            path: path.to_path_buf(),
            malformed: out.malformed_lines.len(),
            total,
            lines: out.malformed_lines,
        });
    }
    if !out.malformed_lines.is_empty() {
        log::warn!(
            "{}: skipped {} malformed line(s)",
            path.display(),
            out.malformed_lines.len()
        );
    }
    Ok(out)
}

/// Batching parameters. Only the landmark model is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    /// Batch length in seconds.
    pub duration: i64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec { duration: 3600 }
    }
}

/// The posts of one time interval together with their term frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowBatch {
    pub index: usize,
    pub start: i64,
    pub end: i64,
    pub posts: Vec<Post>,
    pub tf: BTreeMap<String, u64>,
}

impl WindowBatch {
    /// Builds a batch and computes its term frequencies.
    pub fn new(index: usize, start: i64, end: i64, posts: Vec<Post>) -> Self {
        let mut batch = WindowBatch {
            index,
            start,
            end,
            posts,
            tf: BTreeMap::new(),
        };
        batch.tf = term_frequencies(&batch);
        batch
    }

    /// A batch spanning all given posts; convenient when windowing is not
    /// the point.
    pub fn from_posts(posts: Vec<Post>) -> Self {
        let start = posts.iter().map(|p| p.timestamp).min().unwrap_or(0);
        let end = posts.iter().map(|p| p.timestamp).max().map_or(0, |t| t + 1);
        WindowBatch::new(0, start, end, posts)
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    /// Number of posts containing each word.
    pub fn doc_frequencies(&self) -> BTreeMap<String, u64> {
        let mut df = BTreeMap::new();
        for post in &self.posts {
            let mut words: Vec<&String> = post.words().iter().collect();
            words.sort_unstable();
            words.dedup();
            for w in words {
                *df.entry(w.clone()).or_insert(0) += 1;
            }
        }
        df
    }

    /// Total number of word occurrences in the batch.
    pub fn token_count(&self) -> u64 {
        self.tf.values().sum()
    }
}

/// Total occurrences of every word across the posts of a batch.
pub fn term_frequencies(batch: &WindowBatch) -> BTreeMap<String, u64> {
    let mut tf = BTreeMap::new();
    for post in &batch.posts {
        for w in post.words() {
            *tf.entry(w.clone()).or_insert(0) += 1;
        }
    }
    tf
}

/// Partitions posts into landmark windows. Every interval between the first
/// and the last post yields a batch, including empty ones.
pub fn window_stream(mut posts: Vec<Post>, spec: WindowSpec) -> Result<Vec<WindowBatch>, StreamError> {
    if spec.duration <= 0 {
        return Err(StreamError::InvalidDuration(spec.duration));
    }
    if let Some(p) = posts.iter().find(|p| p.tokens.is_none()) {
        return Err(StreamError::MissingTokens(p.id.clone()));
    }
    if posts.is_empty() {
        return Ok(Vec::new());
    }
    posts.sort_by_key(|p| p.timestamp);

    let landmark = posts[0].timestamp;
    let last = posts[posts.len() - 1].timestamp;
    let n_batches = ((last - landmark) / spec.duration) as usize + 1;

    let mut buckets: Vec<Vec<Post>> = (0..n_batches).map(|_| Vec::new()).collect();
    for post in posts {
        let slot = ((post.timestamp - landmark) / spec.duration) as usize;
        buckets[slot].push(post);
    }

    Ok(buckets
        .into_iter()
        .enumerate()
        .map(|(t, posts)| {
            let start = landmark + t as i64 * spec.duration;
            WindowBatch::new(t, start, start + spec.duration, posts)
        })
        .collect())
}

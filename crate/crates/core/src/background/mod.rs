//! Background-knowledge probability stores.
//!
//! Three read-only models back the term-selection and segmentation
//! detectors: contiguous n-gram counts (orders 1 to 5), anchor-text counts
//! and reference-corpus unigram counts. Models are built in memory and
//! persisted as a versioned directory of memory-mappable tables:
//!
//! ```text
//! manifest.json            format, version, totals
//! ngram-1.tsv / .idx  ...  ngram-<n_max>.tsv / .idx
//! anchors.tsv / .idx
//! reference.tsv / .idx
//! ```

mod store;

pub use store::CountTable;

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub const MAX_ORDER: usize = 5;
pub const FORMAT_NAME: &str = "topicstream-background";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum BackgroundError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("corpus contains no tokens")]
    EmptyCorpus,
    #[error("n-gram order must be in 1..={MAX_ORDER}, got {0}")]
    InvalidOrder(usize),
    #[error("order exceeds model: phrase of {len} words, model holds up to {n_max}")]
    OrderExceedsModel { len: usize, n_max: usize },
    #[error("empty phrase")]
    EmptyPhrase,
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("unsupported model directory: {0}")]
    Manifest(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> BackgroundError + '_ {
    move |source| BackgroundError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Contiguous n-gram counts for orders `1..=n_max`.
#[derive(Debug)]
pub struct NgramModel {
    n_max: usize,
    tables: Vec<CountTable>,
    totals: Vec<u64>,
    distinct_tokens: u64,
}

/// Accumulates n-gram counts document by document.
#[derive(Debug, Clone)]
pub struct NgramCounter {
    n_max: usize,
    counts: Vec<HashMap<String, u64>>,
}

impl NgramCounter {
    pub fn new(n_max: usize) -> Result<Self, BackgroundError> {
        if !(1..=MAX_ORDER).contains(&n_max) {
            return Err(BackgroundError::InvalidOrder(n_max));
        }
        Ok(NgramCounter {
            n_max,
            counts: vec![HashMap::new(); n_max],
        })
    }

    pub fn add_document<S: AsRef<str>>(&mut self, words: &[S]) {
        for n in 1..=self.n_max.min(words.len()) {
            for window in words.windows(n) {
                let key = join_words(window);
                *self.counts[n - 1].entry(key).or_insert(0) += 1;
            }
        }
    }

    pub fn count(&self, phrase: &str) -> u64 {
        let n = phrase.split(' ').count();
        self.counts.get(n - 1).and_then(|m| m.get(phrase)).copied().unwrap_or(0)
    }

    pub fn finish(self) -> Result<NgramModel, BackgroundError> {
        if self.counts[0].is_empty() {
            return Err(BackgroundError::EmptyCorpus);
        }
        let totals = self.counts.iter().map(|m| m.values().sum()).collect();
        let distinct_tokens = self.counts[0].len() as u64;
        Ok(NgramModel {
            n_max: self.n_max,
            tables: self.counts.into_iter().map(CountTable::from_map).collect(),
            totals,
            distinct_tokens,
        })
    }
}

fn join_words<S: AsRef<str>>(words: &[S]) -> String {
    let mut key = String::new();
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            key.push(' ');
        }
        key.push_str(w.as_ref());
    }
    key
}

/// Counts all n-grams of each document (no n-gram spans two documents).
pub fn build_ngram_model<I, D, S>(documents: I, n_max: usize) -> Result<NgramModel, BackgroundError>
where
    I: IntoIterator<Item = D>,
    D: AsRef<[S]>,
    S: AsRef<str>,
{
    let mut counter = NgramCounter::new(n_max)?;
    for doc in documents {
        counter.add_document(doc.as_ref());
    }
    counter.finish()
}

/// Reads corpus files with one document of space-separated tokens per line.
pub fn read_corpus(paths: &[PathBuf]) -> Result<Vec<Vec<String>>, BackgroundError> {
    let mut docs = Vec::new();
    for path in paths {
        let file = File::open(path).map_err(io_err(path))?;
        for line in BufReader::new(file).lines() {
            let line = line.map_err(io_err(path))?;
            let words: Vec<String> = line.split_whitespace().map(str::to_string).collect();
            if !words.is_empty() {
                docs.push(words);
            }
        }
    }
    Ok(docs)
}

impl NgramModel {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn distinct_tokens(&self) -> u64 {
        self.distinct_tokens
    }

    /// Total n-gram occurrences of order `n`.
    pub fn total(&self, n: usize) -> u64 {
        self.totals.get(n.wrapping_sub(1)).copied().unwrap_or(0)
    }

    /// Number of distinct n-grams of order `n`.
    pub fn distinct(&self, n: usize) -> usize {
        self.tables.get(n.wrapping_sub(1)).map_or(0, CountTable::len)
    }

    pub fn count<S: AsRef<str>>(&self, phrase: &[S]) -> u64 {
        match self.tables.get(phrase.len().wrapping_sub(1)) {
            Some(t) => t.get(&join_words(phrase)).unwrap_or(0),
            None => 0,
        }
    }

    /// Floor probability given to unseen n-grams of order `n`:
    /// `1 / distinct_tokens^n`.
    pub fn unseen_probability(&self, n: usize) -> f64 {
        (self.distinct_tokens.max(1) as f64).powi(n as i32).recip()
    }

    /// Corpus-level relative frequency of the phrase among n-grams of the
    /// same order, or the unseen floor.
    pub fn probability<S: AsRef<str>>(&self, phrase: &[S]) -> Result<f64, BackgroundError> {
        let n = phrase.len();
        if n == 0 {
            return Err(BackgroundError::EmptyPhrase);
        }
        if n > self.n_max {
            return Err(BackgroundError::OrderExceedsModel { len: n, n_max: self.n_max });
        }
        let count = self.count(phrase);
        Ok(if count > 0 {
            count as f64 / self.totals[n - 1] as f64
        } else {
            self.unseen_probability(n)
        })
    }
}

/// Hyperlink anchor phrases with their occurrence counts.
#[derive(Debug, Default)]
pub struct AnchorModel {
    table: CountTable,
    total: u64,
}

impl AnchorModel {
    pub fn from_counts<I, S>(counts: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: AsRef<str>,
    {
        let mut map: HashMap<String, u64> = HashMap::new();
        for (phrase, count) in counts {
            let key = normalize_phrase(phrase.as_ref());
            if count > 0 && !key.is_empty() {
                *map.entry(key).or_insert(0) += count;
            }
        }
        let total = map.values().sum();
        AnchorModel {
            table: CountTable::from_map(map),
            total,
        }
    }

    /// Reads `phrase<TAB>count` lines. Repeated phrases are summed.
    pub fn load_tsv(path: &Path) -> Result<Self, BackgroundError> {
        let file = File::open(path).map_err(io_err(path))?;
        let mut counts = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io_err(path))?;
            if line.trim().is_empty() {
                continue;
            }
            let parse = || -> Option<(String, u64)> {
                let (phrase, count) = line.rsplit_once('\t')?;
                Some((phrase.to_string(), count.trim().parse().ok()?))
            };
            let entry = parse().ok_or_else(|| BackgroundError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: "expected phrase<TAB>count".into(),
            })?;
            counts.push(entry);
        }
        Ok(AnchorModel::from_counts(counts))
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Probability that the phrase occurs as an anchor, 0 when absent.
    pub fn probability<S: AsRef<str>>(&self, phrase: &[S]) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let key = normalize_phrase(&join_words(phrase));
        self.table.get(&key).map_or(0.0, |c| c as f64 / self.total as f64)
    }
}

fn normalize_phrase(phrase: &str) -> String {
    phrase.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

/// Unigram counts of the reference corpus.
#[derive(Debug, Default)]
pub struct RefCorpusModel {
    table: CountTable,
    total: u64,
}

impl RefCorpusModel {
    pub fn from_counts<I, S>(counts: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: AsRef<str>,
    {
        let mut map: HashMap<String, u64> = HashMap::new();
        for (w, c) in counts {
            if c > 0 {
                *map.entry(w.as_ref().to_string()).or_insert(0) += c;
            }
        }
        let total = map.values().sum();
        RefCorpusModel {
            table: CountTable::from_map(map),
            total,
        }
    }

    pub fn from_unigrams(ngrams: &NgramModel) -> Self {
        RefCorpusModel::from_counts(ngrams.tables[0].sorted_entries())
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn vocabulary(&self) -> u64 {
        self.table.len() as u64
    }

    pub fn count(&self, word: &str) -> u64 {
        self.table.get(word).unwrap_or(0)
    }

    /// Add-one smoothed probability `(count + 1) / (total + V)`.
    pub fn probability(&self, word: &str) -> f64 {
        (self.count(word) + 1) as f64 / (self.total + self.vocabulary()).max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    n_max: usize,
    ngram_totals: Vec<u64>,
    ngram_distinct: Vec<u64>,
    distinct_tokens: u64,
    anchor_entries: u64,
    anchor_total: u64,
    reference_vocabulary: u64,
    reference_total: u64,
}

/// Per-store entry counts of a model directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    /// Distinct n-grams for n = 1..n_max.
    pub ngrams: Vec<u64>,
    pub anchor_texts: u64,
    pub distinct_tokens: u64,
    pub reference_tokens: u64,
}

impl std::fmt::Display for BuildReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Property\tValue")?;
        for (i, c) in self.ngrams.iter().enumerate() {
            writeln!(f, "{}-gram\t{c}", i + 1)?;
        }
        writeln!(f, "Anchor text\t{}", self.anchor_texts)?;
        writeln!(f, "Distinct tokens\t{}", self.distinct_tokens)?;
        write!(f, "Reference tokens\t{}", self.reference_tokens)
    }
}

/// The three stores used by the detectors.
#[derive(Debug)]
pub struct BackgroundModels {
    pub ngrams: NgramModel,
    pub anchors: AnchorModel,
    pub reference: RefCorpusModel,
}

impl BackgroundModels {
    pub fn report(&self) -> BuildReport {
        BuildReport {
            ngrams: (1..=self.ngrams.n_max).map(|n| self.ngrams.distinct(n) as u64).collect(),
            anchor_texts: self.anchors.len() as u64,
            distinct_tokens: self.ngrams.distinct_tokens,
            reference_tokens: self.reference.total,
        }
    }

    fn manifest(&self) -> Manifest {
        Manifest {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            n_max: self.ngrams.n_max,
            ngram_totals: self.ngrams.totals.clone(),
            ngram_distinct: (1..=self.ngrams.n_max).map(|n| self.ngrams.distinct(n) as u64).collect(),
            distinct_tokens: self.ngrams.distinct_tokens,
            anchor_entries: self.anchors.len() as u64,
            anchor_total: self.anchors.total,
            reference_vocabulary: self.reference.vocabulary(),
            reference_total: self.reference.total,
        }
    }

    /// Writes the model directory. The output is assembled in a sibling
    /// temporary directory and renamed into place, so a failed build leaves
    /// nothing behind.
    pub fn save(&self, dir: &Path) -> Result<(), BackgroundError> {
        let parent = dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(parent).map_err(io_err(parent))?;
        let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let tmp = parent.join(format!(".{name}.tmp-{}", std::process::id()));
        let result = self.write_into(&tmp).and_then(|()| {
            if dir.exists() {
                fs::remove_dir_all(dir).map_err(io_err(dir))?;
            }
            fs::rename(&tmp, dir).map_err(io_err(dir))
        });
        if result.is_err() {
            let _ = fs::remove_dir_all(&tmp);
        }
        result
    }

    fn write_into(&self, dir: &Path) -> Result<(), BackgroundError> {
        if dir.exists() {
            fs::remove_dir_all(dir).map_err(io_err(dir))?;
        }
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        for (i, table) in self.ngrams.tables.iter().enumerate() {
            table.write(dir, &format!("ngram-{}", i + 1)).map_err(io_err(dir))?;
        }
        self.anchors.table.write(dir, "anchors").map_err(io_err(dir))?;
        self.reference.table.write(dir, "reference").map_err(io_err(dir))?;
        let manifest = serde_json::to_string_pretty(&self.manifest()).expect("manifest serializes");
        let path = dir.join("manifest.json");
        fs::write(&path, manifest + "\n").map_err(io_err(&path))
    }

    pub fn load(dir: &Path) -> Result<Self, BackgroundError> {
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| BackgroundError::Manifest(e.to_string()))?;
        if m.format != FORMAT_NAME || m.version != FORMAT_VERSION {
            return Err(BackgroundError::Manifest(format!("{} v{}", m.format, m.version)));
        }
        if !(1..=MAX_ORDER).contains(&m.n_max) || m.ngram_totals.len() != m.n_max {
            return Err(BackgroundError::Manifest(format!("bad n_max {}", m.n_max)));
        }
        let tables = (1..=m.n_max)
            .map(|n| CountTable::open(dir, &format!("ngram-{n}")).map_err(io_err(dir)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BackgroundModels {
            ngrams: NgramModel {
                n_max: m.n_max,
                tables,
                totals: m.ngram_totals,
                distinct_tokens: m.distinct_tokens,
            },
            anchors: AnchorModel {
                table: CountTable::open(dir, "anchors").map_err(io_err(dir))?,
                total: m.anchor_total,
            },
            reference: RefCorpusModel {
                table: CountTable::open(dir, "reference").map_err(io_err(dir))?,
                total: m.reference_total,
            },
        })
    }
}

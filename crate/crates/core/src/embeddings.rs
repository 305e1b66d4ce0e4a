//! Pretrained word-vector tables, document embedding and vector distances.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: no vectors")]
    Empty { path: PathBuf },
    #[error("{path}:{line}: expected {expected} values, found {found}")]
    Dimension {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{path}:{line}: invalid number {token:?}")]
    Number { path: PathBuf, line: usize, token: String },
    #[error("unembeddable document: none of its {0} words has a vector")]
    Unembeddable(usize),
    #[error("empty document")]
    EmptyDocument,
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("dimension mismatch: {0} vs {1}")]
    Mismatch(usize, usize),
}

/// Which embedding method produced a table. Informational only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EmbeddingSource {
    Word2Vec,
    FastText,
    Glove,
    Other,
}

impl fmt::Display for EmbeddingSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmbeddingSource::Word2Vec => "word2vec",
            EmbeddingSource::FastText => "fasttext",
            EmbeddingSource::Glove => "glove",
            EmbeddingSource::Other => "other",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
    pub source: EmbeddingSource,
}

impl EmbeddingTable {
    /// Builds a table from in-memory vectors. All must share one length.
    pub fn from_vectors<I>(source: EmbeddingSource, vectors: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut dim = None;
        let mut map = HashMap::new();
        for (line, (word, v)) in vectors.into_iter().enumerate() {
            let d = *dim.get_or_insert(v.len());
            if v.len() != d || d == 0 {
                return Err(EmbeddingError::Dimension {
                    path: PathBuf::from("<memory>"),
                    line: line + 1,
                    expected: d,
                    found: v.len(),
                });
            }
            map.insert(word, v);
        }
        let dim = dim.ok_or(EmbeddingError::Empty {
            path: PathBuf::from("<memory>"),
        })?;
        Ok(EmbeddingTable {
            dim,
            vectors: map,
            source,
        })
    }

    /// Reads the common `.vec` text format: an optional `count dim` header,
    /// then `word v1 ... vd` per line. A repeated word keeps its last vector.
    pub fn load(path: &Path, source: EmbeddingSource) -> Result<Self, EmbeddingError> {
        let io_err = |source| EmbeddingError::Io {
            path: path.to_path_buf(),
            source,
        };
        let reader = BufReader::new(File::open(path).map_err(io_err)?);
        let mut dim: Option<usize> = None;
        let mut vectors: HashMap<String, Vec<f64>> = HashMap::new();
        let mut duplicates = 0usize;
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(io_err)?;
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            let rest: Vec<&str> = fields.collect();
            if i == 0 && rest.len() == 1 && word.parse::<u64>().is_ok() {
                if let Ok(d) = rest[0].parse::<usize>() {
                    dim = Some(d);
                    continue;
                }
            }
            let expected = *dim.get_or_insert(rest.len());
            if rest.len() != expected || expected == 0 {
                return Err(EmbeddingError::Dimension {
                    path: path.to_path_buf(),
                    line: i + 1,
                    expected,
                    found: rest.len(),
                });
            }
            let v = rest
                .iter()
                .map(|t| {
                    t.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| EmbeddingError::Number {
                        path: path.to_path_buf(),
                        line: i + 1,
                        token: t.to_string(),
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            if vectors.insert(word.to_string(), v).is_some() {
                duplicates += 1;
            }
        }
        if duplicates > 0 {
            log::warn!("{}: {duplicates} repeated word(s); kept the last vector", path.display());
        }
        match dim {
            Some(dim) if !vectors.is_empty() => Ok(EmbeddingTable {
                dim,
                vectors,
                source,
            }),
            _ => Err(EmbeddingError::Empty {
                path: path.to_path_buf(),
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OovPolicy {
    /// Average only the words that have vectors.
    #[default]
    Skip,
    /// Count missing words as zero vectors.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocVector {
    pub vector: Vec<f64>,
    pub oov_count: usize,
}

/// Mean of the word vectors of a document.
pub fn embed_document<S: AsRef<str>>(words: &[S], table: &EmbeddingTable, policy: OovPolicy) -> Result<DocVector, EmbeddingError> {
    if words.is_empty() {
        return Err(EmbeddingError::EmptyDocument);
    }
    let mut sum = vec![0.0; table.dim];
    let mut found = 0usize;
    for w in words {
        if let Some(v) = table.get(w.as_ref()) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            found += 1;
        }
    }
    let oov_count = words.len() - found;
    let denom = match policy {
        OovPolicy::Skip if found == 0 => return Err(EmbeddingError::Unembeddable(words.len())),
        OovPolicy::Skip => found,
        OovPolicy::Zero => words.len(),
    };
    for s in &mut sum {
        *s /= denom as f64;
    }
    Ok(DocVector { vector: sum, oov_count })
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `1 - cos(a, b)`, in `[0, 2]`.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::Mismatch(a.len(), b.len()));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(EmbeddingError::ZeroVector);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((1.0 - dot / (na * nb)).clamp(0.0, 2.0))
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::Mismatch(a.len(), b.len()));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

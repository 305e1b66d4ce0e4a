//! Scoring detected topics against a labelled stream, and choosing
//! parameters by sweeping over value ranges.

mod fs;
mod prf;
mod report;
mod sweep;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use fs::{class_fs, cluster_fs, fs_scores, mean_fs, weighted_mean, Contingency, EntropyKernel, FsKernel, FsScores};
pub use prf::{topic_prf, Prf, DEFAULT_MATCH_THRESHOLD};
pub use report::{evaluate_run, FsSummary, RunMetrics, WindowMetrics, WindowOutput};
pub use sweep::{parse_range, tune_parameter, Criterion, ParamGrid, Params, RangeExpr, TuneResult};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no golden classes to compare with")]
    NoGoldenClasses,
    #[error("nothing to score: no labelled post is assigned to any cluster")]
    EmptyOutput,
    #[error("range {input:?}, position {pos}: {msg}")]
    Range { input: String, pos: usize, msg: String },
    #[error("parameter grid: {0}")]
    Grid(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{path}:{line}: post {id} labelled twice")]
    DuplicatePost { path: PathBuf, line: usize, id: String },
}

/// One line of a golden-standard file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenRecord {
    pub post_id: String,
    pub classes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

/// One line of a class catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogRecord {
    pub class: String,
    pub keywords: Vec<String>,
}

/// Expert labels: every post's classes (possibly several, possibly none)
/// with an assignment score, and each class's representative keywords.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GoldenStandard {
    pub labels: BTreeMap<String, (BTreeSet<String>, f64)>,
    pub catalog: BTreeMap<String, BTreeSet<String>>,
}

impl GoldenStandard {
    pub fn new(records: impl IntoIterator<Item = GoldenRecord>, catalog: impl IntoIterator<Item = CatalogRecord>) -> Self {
        GoldenStandard {
            labels: records.into_iter().map(|r| (r.post_id, (r.classes.into_iter().collect(), r.score.unwrap_or(1.0)))).collect(),
            catalog: catalog.into_iter().map(|c| (c.class, c.keywords.into_iter().collect())).collect(),
        }
    }

    pub fn load(golden: &Path, catalog: &Path) -> Result<Self, EvalError> {
        let records: Vec<(usize, GoldenRecord)> = read_jsonl_numbered(golden)?;
        let mut seen = BTreeSet::new();
        for (line, r) in &records {
            if !seen.insert(&r.post_id) {
                return Err(EvalError::DuplicatePost {
                    path: golden.to_path_buf(),
                    line: *line,
                    id: r.post_id.clone(),
                });
            }
        }
        let records = records.into_iter().map(|(_, r)| r);
        let catalog: Vec<CatalogRecord> = read_jsonl(catalog)?;
        Ok(GoldenStandard::new(records, catalog))
    }

    pub fn save(&self, golden: &Path, catalog: &Path) -> Result<(), EvalError> {
        let records = self.labels.iter().map(|(id, (classes, score))| GoldenRecord {
            post_id: id.clone(),
            classes: classes.iter().cloned().collect(),
            score: (*score != 1.0).then_some(*score),
        });
        write_jsonl(golden, records)?;
        let entries = self.catalog.iter().map(|(class, kw)| CatalogRecord {
            class: class.clone(),
            keywords: kw.iter().cloned().collect(),
        });
        write_jsonl(catalog, entries)
    }

    /// Classes with at least one labelled post among `post_ids`.
    pub fn classes_among<'a>(&self, post_ids: impl IntoIterator<Item = &'a String>) -> BTreeSet<String> {
        post_ids
            .into_iter()
            .filter_map(|id| self.labels.get(id))
            .flat_map(|(c, _)| c.iter().cloned())
            .collect()
    }
}

/// Reads one JSON value per non-blank line.
pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, EvalError> {
    Ok(read_jsonl_numbered(path)?.into_iter().map(|(_, v)| v).collect())
}

/// Like [`read_jsonl`], keeping each value's 1-based line number.
fn read_jsonl_numbered<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<(usize, T)>, EvalError> {
    let io_err = |source| EvalError::Io { path: path.to_path_buf(), source };
    let file = File::open(path).map_err(io_err)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| EvalError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push((i + 1, value));
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<(), EvalError> {
    let io_err = |source| EvalError::Io { path: path.to_path_buf(), source };
    let mut out = io::BufWriter::new(File::create(path).map_err(io_err)?);
    for item in items {
        serde_json::to_writer(&mut out, &item).expect("records serialize");
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let g = GoldenStandard::new(
            [
                GoldenRecord { post_id: "p1".into(), classes: vec!["a".into(), "b".into()], score: None },
                GoldenRecord { post_id: "p2".into(), classes: vec![], score: Some(0.5) },
            ],
            [CatalogRecord { class: "a".into(), keywords: vec!["quake".into()] }],
        );
        let (gp, cp) = (dir.path().join("g.jsonl"), dir.path().join("c.jsonl"));
        g.save(&gp, &cp).unwrap();
        assert_eq!(GoldenStandard::load(&gp, &cp).unwrap(), g);
        assert_eq!(g.classes_among(&["p1".to_string(), "zz".to_string()]), BTreeSet::from(["a".to_string(), "b".to_string()]));
    }

    #[test]
    fn duplicate_and_malformed_lines_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let gp = dir.path().join("g.jsonl");
        let cp = dir.path().join("c.jsonl");
        std::fs::write(&cp, "").unwrap();
        std::fs::write(&gp, "{\"post_id\":\"1\",\"classes\":[]}\n\n{\"post_id\":\"1\",\"classes\":[\"a\"]}\n").unwrap();
        assert!(matches!(GoldenStandard::load(&gp, &cp), Err(EvalError::DuplicatePost { line: 3, .. })));
        std::fs::write(&gp, "{\"post_id\":1}\n").unwrap();
        assert!(matches!(GoldenStandard::load(&gp, &cp), Err(EvalError::Parse { line: 1, .. })));
    }
}

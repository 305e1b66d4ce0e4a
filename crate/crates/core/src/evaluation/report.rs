//! Per-window and whole-run metrics for a detector's output.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::topic::Topic;

use super::{fs_scores, mean_fs, topic_prf, weighted_mean, Contingency, EvalError, FsKernel, FsScores, GoldenStandard, Prf};

/// Topics of one window, plus the classes that window's posts carry.
/// Without `present`, every catalog class is expected in the window.
#[derive(Debug, Clone, Copy)]
pub struct WindowOutput<'a> {
    pub window: usize,
    pub topics: &'a [Topic],
    pub present: Option<&'a BTreeSet<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowMetrics {
    pub window: usize,
    pub prf: Prf,
    /// Missing when no labelled post is assigned to any topic.
    pub fs: Option<FsScores>,
    pub unlabeled: usize,
    pub classless: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub windows: Vec<WindowMetrics>,
    /// Counts pooled over windows.
    pub prf: Prf,
    pub fs: Option<FsSummary>,
    pub unlabeled: usize,
    pub classless: usize,
}

/// Run-level FS: each window's scores weighted by the labelled mass it
/// assigns. A class recurring in every window is expected to show up as a
/// separate topic in each, so windows are not pooled into one table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FsSummary {
    pub cluster_fs: f64,
    pub class_fs: f64,
    pub mean_fs: f64,
}

fn window_prf(out: &WindowOutput<'_>, golden: &GoldenStandard, threshold: f64) -> Result<Prf, EvalError> {
    let all = topic_prf(out.topics, &golden.catalog, threshold)?;
    let Some(present) = out.present else { return Ok(all) };
    if present.is_empty() {
        // nothing to recall; precision still counts
        return Ok(Prf::from_counts(all.matched_topics, all.topics, 0, 0));
    }
    let expected: BTreeMap<String, BTreeSet<String>> = golden.catalog.iter().filter(|(c, _)| present.contains(*c)).map(|(c, k)| (c.clone(), k.clone())).collect();
    if expected.is_empty() {
        return Err(EvalError::NoGoldenClasses);
    }
    let recall = topic_prf(out.topics, &expected, threshold)?;
    Ok(Prf::from_counts(all.matched_topics, all.topics, recall.covered_classes, recall.classes))
}

fn fs_or_none(table: &Contingency, kernel: &impl FsKernel) -> Result<Option<FsScores>, EvalError> {
    match fs_scores(table, kernel) {
        Ok(s) => Ok(Some(s)),
        Err(EvalError::EmptyOutput) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Scores every window and the run as a whole.
pub fn evaluate_run(windows: &[WindowOutput<'_>], golden: &GoldenStandard, threshold: f64, kernel: &impl FsKernel) -> Result<RunMetrics, EvalError> {
    if golden.catalog.is_empty() {
        return Err(EvalError::NoGoldenClasses);
    }
    let mut per_window = Vec::with_capacity(windows.len());
    let mut masses = Vec::with_capacity(windows.len());
    for w in windows {
        let table = Contingency::build(w.topics, golden);
        masses.push(table.total());
        per_window.push(WindowMetrics {
            window: w.window,
            prf: window_prf(w, golden, threshold)?,
            fs: fs_or_none(&table, kernel)?,
            unlabeled: table.unlabeled,
            classless: table.classless,
        });
    }
    let scored: Vec<(&FsScores, f64)> = per_window.iter().zip(&masses).filter_map(|(w, &m)| w.fs.as_ref().map(|f| (f, m))).collect();
    let fs = if scored.is_empty() {
        None
    } else {
        let weights: Vec<f64> = scored.iter().map(|s| s.1).collect();
        let pick = |f: fn(&FsScores) -> f64| weighted_mean(&scored.iter().map(|s| f(s.0)).collect::<Vec<_>>(), &weights);
        let (cluster_fs, class_fs) = (pick(|f| f.cluster_fs)?, pick(|f| f.class_fs)?);
        Some(FsSummary {
            cluster_fs,
            class_fs,
            mean_fs: mean_fs(class_fs, cluster_fs),
        })
    };
    Ok(RunMetrics {
        prf: Prf::pooled(per_window.iter().map(|w| &w.prf)),
        fs,
        unlabeled: per_window.iter().map(|w| w.unlabeled).sum(),
        classless: per_window.iter().map(|w| w.classless).sum(),
        windows: per_window,
    })
}

//! Utility-based emerging-topic detection.

use super::{compute_utilities, consolidate_patterns, hupm_mine, HupmParams, UtilityTable};
use crate::stream::WindowBatch;
use crate::topic::Topic;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UfptConfig {
    /// `min_util` as a fraction of the window's total transaction utility.
    pub min_util_fraction: f64,
    /// Longest pattern mined.
    pub max_pattern_len: Option<usize>,
}

impl Default for UfptConfig {
    fn default() -> Self {
        UfptConfig {
            min_util_fraction: 0.05,
            max_pattern_len: Some(5),
        }
    }
}

/// Keeps the previous window to weigh rising words.
#[derive(Debug, Clone, Default)]
pub struct UfptDetector {
    pub config: UfptConfig,
    prev: Option<WindowBatch>,
}

impl UfptDetector {
    pub fn new(config: UfptConfig) -> Self {
        UfptDetector { config, prev: None }
    }

    /// Mines with an absolute `min_util` instead of the configured fraction.
    pub fn detect_with_min_util(&mut self, batch: &WindowBatch, min_util: f64) -> Vec<Topic> {
        let table = compute_utilities(batch, self.prev.as_ref());
        self.mine(batch, &table, min_util)
    }

    pub fn detect(&mut self, batch: &WindowBatch) -> Vec<Topic> {
        let table = compute_utilities(batch, self.prev.as_ref());
        let min_util = self.config.min_util_fraction * table.total_utility() as f64;
        self.mine(batch, &table, min_util)
    }

    fn mine(&mut self, batch: &WindowBatch, table: &UtilityTable, min_util: f64) -> Vec<Topic> {
        self.prev = Some(batch.clone());
        let params = HupmParams {
            min_util,
            max_len: self.config.max_pattern_len,
        };
        consolidate_patterns(hupm_mine(table, &params))
            .into_iter()
            .map(|p| {
                let score = p.weight() as f64;
                let mut keywords = p.items;
                keywords.sort_by(|a, b| {
                    let ua = table.external[a] * batch.tf[a];
                    let ub = table.external[b] * batch.tf[b];
                    ub.cmp(&ua).then_with(|| a.cmp(b))
                });
                Topic::new(keywords, p.post_ids, score)
            })
            .collect()
    }
}

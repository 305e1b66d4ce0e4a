//! Frequent-pattern and high-utility-pattern mining, and the three
//! pattern-mining detectors built on them.

mod dsfg;
mod growth;
mod tscv;
mod ufpt;
mod utility;

pub use dsfg::{classify_window, dynamic_min_support, dynamic_support, maximal_patterns, DsfgConfig, DsfgDetector, WindowSize};
pub use growth::{fp_growth, fp_growth_bounded};
pub use tscv::{theta, tscv_detect, TscvConfig};
pub use ufpt::{UfptConfig, UfptDetector};
pub use utility::{compute_utilities, consolidate_patterns, hupm_mine, HupmParams, UtilityTable};

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::bitset::BitSet;
use crate::stream::WindowBatch;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FpError {
    #[error("empty window")]
    EmptyWindow,
}

/// A post seen as a set of items (words) with per-item occurrence counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub post_id: String,
    pub multiplicities: BTreeMap<String, u64>,
}

impl Transaction {
    pub fn new<S: AsRef<str>>(post_id: impl Into<String>, words: &[S]) -> Self {
        let mut multiplicities = BTreeMap::new();
        for w in words {
            *multiplicities.entry(w.as_ref().to_string()).or_insert(0) += 1;
        }
        Transaction {
            post_id: post_id.into(),
            multiplicities,
        }
    }

    pub fn items(&self) -> impl Iterator<Item = &String> {
        self.multiplicities.keys()
    }
}

pub fn transactions(batch: &WindowBatch) -> Vec<Transaction> {
    batch.posts.iter().map(|p| Transaction::new(p.id.clone(), p.words())).collect()
}

/// An itemset with its support, optional utility and supporting posts.
/// Items are kept in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub items: Vec<String>,
    pub support: u64,
    pub utility: Option<u64>,
    pub post_ids: BTreeSet<String>,
}

impl Pattern {
    /// Utility when known, support otherwise.
    pub fn weight(&self) -> u64 {
        self.utility.unwrap_or(self.support)
    }
}

/// Dense ids for the words of a transaction list. Ids follow lexicographic
/// word order, so sorting ids sorts words.
#[derive(Debug, Clone)]
pub(crate) struct Vocab {
    pub words: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    pub fn new(transactions: &[Transaction]) -> Self {
        let words: BTreeSet<&String> = transactions.iter().flat_map(|t| t.items()).collect();
        let words: Vec<String> = words.into_iter().cloned().collect();
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        Vocab { words, index }
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    /// Transactions as sorted id lists.
    pub fn encode(&self, transactions: &[Transaction]) -> Vec<Vec<u32>> {
        transactions
            .iter()
            .map(|t| t.items().map(|w| self.index[w]).collect())
            .collect()
    }

    /// Per-item bit set of containing transactions.
    pub fn tid_sets(&self, encoded: &[Vec<u32>]) -> Vec<BitSet> {
        let mut sets = vec![BitSet::new(encoded.len()); self.len()];
        for (tid, items) in encoded.iter().enumerate() {
            for &i in items {
                sets[i as usize].insert(tid);
            }
        }
        sets
    }
}

/// Transactions containing every item of `items`.
pub(crate) fn cover(items: &[u32], tid_sets: &[BitSet], n: usize) -> BitSet {
    let mut set = BitSet::full(n);
    for &i in items {
        set.intersect_with(&tid_sets[i as usize]);
    }
    set
}

pub(crate) fn post_ids_of(set: &BitSet, transactions: &[Transaction]) -> BTreeSet<String> {
    set.iter().map(|t| transactions[t].post_id.clone()).collect()
}

//! Word utilities and exact high-utility itemset mining.
//!
//! The utility of a word in a post is its occurrence count (internal
//! utility) times a per-window weight (external utility). Mining follows the
//! utility-list scheme: items whose transaction-weighted utility falls below
//! the threshold are dropped, the rest are ordered by ascending TWU, and the
//! search extends an itemset only while its utility plus the remaining
//! utility of its transactions can still reach the threshold.

use std::collections::{BTreeMap, HashMap};

use super::{Pattern, Transaction, Vocab};
use crate::stream::WindowBatch;

/// Internal, external, transaction and transaction-weighted utilities of a
/// list of transactions.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityTable {
    pub transactions: Vec<Transaction>,
    pub external: BTreeMap<String, u64>,
    /// Transaction utility per post, aligned with `transactions`.
    pub tu: Vec<u64>,
    pub twu: BTreeMap<String, u64>,
}

impl UtilityTable {
    /// Words without an external utility get weight 1.
    pub fn new(transactions: Vec<Transaction>, mut external: BTreeMap<String, u64>) -> Self {
        for t in &transactions {
            for w in t.items() {
                external.entry(w.clone()).or_insert(1);
            }
        }
        let tu: Vec<u64> = transactions
            .iter()
            .map(|t| t.multiplicities.iter().map(|(w, &c)| c * external[w]).sum())
            .collect();
        let mut twu = BTreeMap::new();
        for (t, &u) in transactions.iter().zip(&tu) {
            for w in t.items() {
                *twu.entry(w.clone()).or_insert(0) += u;
            }
        }
        UtilityTable {
            transactions,
            external,
            tu,
            twu,
        }
    }

    pub fn internal(&self, word: &str, post: usize) -> u64 {
        self.transactions[post].multiplicities.get(word).copied().unwrap_or(0)
    }

    pub fn utility(&self, word: &str, post: usize) -> u64 {
        self.internal(word, post) * self.external.get(word).copied().unwrap_or(0)
    }

    pub fn total_utility(&self) -> u64 {
        self.tu.iter().sum()
    }
}

/// External utility `max(TF_t(w) - TF_{t-1}(w), 0) + 1`: rising words weigh
/// more, steady or declining words keep unit weight.
pub fn compute_utilities(batch: &WindowBatch, prev: Option<&WindowBatch>) -> UtilityTable {
    let empty = BTreeMap::new();
    let prev_tf = prev.map_or(&empty, |b| &b.tf);
    let external = batch
        .tf
        .iter()
        .map(|(w, &tf)| {
            let before = prev_tf.get(w).copied().unwrap_or(0);
            (w.clone(), tf.saturating_sub(before) + 1)
        })
        .collect();
    UtilityTable::new(super::transactions(batch), external)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HupmParams {
    pub min_util: f64,
    /// Longest itemset to report; `None` for no limit.
    pub max_len: Option<usize>,
}

impl HupmParams {
    pub fn new(min_util: f64) -> Self {
        HupmParams { min_util, max_len: None }
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    tid: u32,
    iu: u64,
    ru: u64,
}

#[derive(Debug, Clone)]
struct UtilityList {
    item: u32,
    entries: Vec<Entry>,
    sum_iu: u64,
    sum_ru: u64,
}

impl UtilityList {
    fn from_entries(item: u32, entries: Vec<Entry>) -> Self {
        let sum_iu = entries.iter().map(|e| e.iu).sum();
        let sum_ru = entries.iter().map(|e| e.ru).sum();
        UtilityList {
            item,
            entries,
            sum_iu,
            sum_ru,
        }
    }
}

/// Utility list of `prefix ∪ {x, y}` from those of `prefix ∪ {x}` and
/// `prefix ∪ {y}`.
fn join(prefix: Option<&UtilityList>, px: &UtilityList, py: &UtilityList) -> UtilityList {
    let mut entries = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < px.entries.len() && j < py.entries.len() {
        let (ex, ey) = (px.entries[i], py.entries[j]);
        match ex.tid.cmp(&ey.tid) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let shared = prefix.map_or(0, |p| {
                    let k = p.entries.binary_search_by_key(&ex.tid, |e| e.tid).expect("prefix covers tid");
                    p.entries[k].iu
                });
                entries.push(Entry {
                    tid: ex.tid,
                    iu: ex.iu + ey.iu - shared,
                    ru: ey.ru,
                });
                i += 1;
                j += 1;
            }
        }
    }
    UtilityList::from_entries(py.item, entries)
}

struct Search<'a> {
    min_util: f64,
    max_len: usize,
    out: &'a mut Vec<(Vec<u32>, UtilityList)>,
}

impl Search<'_> {
    fn run(&mut self, prefix: &mut Vec<u32>, prefix_list: Option<&UtilityList>, lists: &[UtilityList]) {
        for (i, x) in lists.iter().enumerate() {
            if x.entries.is_empty() {
                continue;
            }
            if x.sum_iu as f64 >= self.min_util {
                let mut items = prefix.clone();
                items.push(x.item);
                self.out.push((items, x.clone()));
            }
            if (x.sum_iu + x.sum_ru) as f64 >= self.min_util && prefix.len() + 1 < self.max_len {
                let extensions: Vec<UtilityList> = lists[i + 1..]
                    .iter()
                    .map(|y| join(prefix_list, x, y))
                    .filter(|l| !l.entries.is_empty())
                    .collect();
                if !extensions.is_empty() {
                    prefix.push(x.item);
                    self.run(prefix, Some(x), &extensions);
                    prefix.pop();
                }
            }
        }
    }
}

/// Every itemset occurring in at least one transaction whose utility
/// `Σ_posts Σ_items internal·external` reaches `min_util`. Words whose TWU is
/// below `min_util` are removed first. Results are sorted by descending
/// utility.
pub fn hupm_mine(table: &UtilityTable, params: &HupmParams) -> Vec<Pattern> {
    let txs = &table.transactions;
    let vocab = Vocab::new(txs);
    let promising: Vec<bool> = vocab
        .words
        .iter()
        .map(|w| table.twu.get(w).copied().unwrap_or(0) as f64 >= params.min_util)
        .collect();

    // rank items by ascending TWU
    let mut order: Vec<u32> = (0..vocab.len() as u32).filter(|&i| promising[i as usize]).collect();
    order.sort_by_key(|&i| (table.twu[&vocab.words[i as usize]], i));
    let rank: HashMap<u32, usize> = order.iter().enumerate().map(|(r, &i)| (i, r)).collect();

    let mut per_item: Vec<Vec<Entry>> = vec![Vec::new(); order.len()];
    for (tid, t) in txs.iter().enumerate() {
        let mut row: Vec<(usize, u64)> = t
            .multiplicities
            .iter()
            .filter_map(|(w, &c)| {
                let id = vocab.id(w)?;
                rank.get(&id).map(|&r| (r, c * table.external[w]))
            })
            .collect();
        row.sort_unstable();
        let mut remaining: u64 = row.iter().map(|&(_, u)| u).sum();
        for (r, u) in row {
            remaining -= u;
            per_item[r].push(Entry {
                tid: tid as u32,
                iu: u,
                ru: remaining,
            });
        }
    }
    let lists: Vec<UtilityList> = per_item
        .into_iter()
        .enumerate()
        .map(|(r, entries)| UtilityList::from_entries(order[r], entries))
        .collect();

    let mut found = Vec::new();
    Search {
        min_util: params.min_util,
        max_len: params.max_len.unwrap_or(usize::MAX),
        out: &mut found,
    }
    .run(&mut Vec::new(), None, &lists);

    let mut patterns: Vec<Pattern> = found
        .into_iter()
        .map(|(mut ids, list)| {
            ids.sort_unstable();
            Pattern {
                items: ids.iter().map(|&i| vocab.words[i as usize].clone()).collect(),
                support: list.entries.len() as u64,
                utility: Some(list.sum_iu),
                post_ids: list.entries.iter().map(|e| txs[e.tid as usize].post_id.clone()).collect(),
            }
        })
        .collect();
    sort_by_weight(&mut patterns);
    patterns
}

fn sort_by_weight(patterns: &mut [Pattern]) {
    patterns.sort_by(|a, b| b.weight().cmp(&a.weight()).then_with(|| a.items.cmp(&b.items)));
}

fn is_proper_subset(small: &[String], large: &[String]) -> bool {
    small.len() < large.len() && small.iter().all(|w| large.binary_search(w).is_ok())
}

/// Merges overlapping patterns. Identical itemsets collapse to the one with
/// the highest weight; a pattern is absorbed when a strict superset with a
/// higher weight covers at least half of its posts. Output is sorted by
/// descending weight.
pub fn consolidate_patterns(patterns: Vec<Pattern>) -> Vec<Pattern> {
    let mut by_items: BTreeMap<Vec<String>, Pattern> = BTreeMap::new();
    for mut p in patterns {
        p.items.sort();
        p.items.dedup();
        match by_items.get(&p.items) {
            Some(existing) if existing.weight() >= p.weight() => {}
            _ => {
                by_items.insert(p.items.clone(), p);
            }
        }
    }
    let unique: Vec<Pattern> = by_items.into_values().collect();
    let index: HashMap<&[String], usize> = unique.iter().enumerate().map(|(i, p)| (p.items.as_slice(), i)).collect();

    let absorbs = |big: &Pattern, small: &Pattern| {
        big.weight() > small.weight()
            && 2 * big.post_ids.intersection(&small.post_ids).count() >= small.post_ids.len()
    };

    const SUBSET_ENUMERATION_LIMIT: usize = 12;
    let mut absorbed = vec![false; unique.len()];
    for big in &unique {
        let n = big.items.len();
        if n <= SUBSET_ENUMERATION_LIMIT {
            for mask in 1u32..(1 << n) - 1 {
                let sub: Vec<String> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| big.items[i].clone()).collect();
                if let Some(&j) = index.get(sub.as_slice()) {
                    if !absorbed[j] && absorbs(big, &unique[j]) {
                        absorbed[j] = true;
                    }
                }
            }
        } else {
            for (j, small) in unique.iter().enumerate() {
                if !absorbed[j] && is_proper_subset(&small.items, &big.items) && absorbs(big, small) {
                    absorbed[j] = true;
                }
            }
        }
    }

    let mut out: Vec<Pattern> = unique
        .into_iter()
        .zip(absorbed)
        .filter_map(|(p, gone)| (!gone).then_some(p))
        .collect();
    sort_by_weight(&mut out);
    out
}

//! FP-growth over an arena-allocated FP-tree.

use super::{cover, post_ids_of, Pattern, Transaction, Vocab};

struct Node {
    item: u32,
    count: u64,
    parent: usize,
    children: Vec<usize>,
}

const ROOT: usize = 0;

struct FpTree {
    nodes: Vec<Node>,
    /// Node lists per frequent item, indexed by rank.
    header: Vec<Vec<usize>>,
}

impl FpTree {
    /// `paths` hold ranks (0 = most frequent) in ascending order.
    fn build(paths: &[(Vec<usize>, u64)], n_ranks: usize) -> Self {
        let mut tree = FpTree {
            nodes: vec![Node {
                item: u32::MAX,
                count: 0,
                parent: ROOT,
                children: Vec::new(),
            }],
            header: vec![Vec::new(); n_ranks],
        };
        for (path, weight) in paths {
            let mut cur = ROOT;
            for &rank in path {
                let existing = tree.nodes[cur]
                    .children
                    .iter()
                    .copied()
                    .find(|&c| tree.nodes[c].item as usize == rank);
                cur = match existing {
                    Some(c) => c,
                    None => {
                        let id = tree.nodes.len();
                        tree.nodes.push(Node {
                            item: rank as u32,
                            count: 0,
                            parent: cur,
                            children: Vec::new(),
                        });
                        tree.nodes[cur].children.push(id);
                        tree.header[rank].push(id);
                        id
                    }
                };
                tree.nodes[cur].count += weight;
            }
        }
        tree
    }

    fn prefix_path(&self, mut node: usize) -> Vec<usize> {
        let mut path = Vec::new();
        node = self.nodes[node].parent;
        while node != ROOT {
            path.push(self.nodes[node].item as usize);
            node = self.nodes[node].parent;
        }
        path.reverse();
        path
    }
}

/// Mines weighted id paths; appends `(itemset, support)` pairs to `out`.
fn mine(paths: Vec<(Vec<u32>, u64)>, min_support: u64, max_len: usize, suffix: &mut Vec<u32>, out: &mut Vec<(Vec<u32>, u64)>) {
    let mut counts: std::collections::HashMap<u32, u64> = std::collections::HashMap::new();
    for (path, w) in &paths {
        for &i in path {
            *counts.entry(i).or_insert(0) += w;
        }
    }
    let mut frequent: Vec<(u32, u64)> = counts.into_iter().filter(|&(_, c)| c >= min_support).collect();
    if frequent.is_empty() {
        return;
    }
    frequent.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let rank_of: std::collections::HashMap<u32, usize> =
        frequent.iter().enumerate().map(|(r, &(i, _))| (i, r)).collect();

    let ranked: Vec<(Vec<usize>, u64)> = paths
        .iter()
        .filter_map(|(path, w)| {
            let mut r: Vec<usize> = path.iter().filter_map(|i| rank_of.get(i).copied()).collect();
            if r.is_empty() {
                return None;
            }
            r.sort_unstable();
            Some((r, *w))
        })
        .collect();
    let tree = FpTree::build(&ranked, frequent.len());

    for rank in (0..frequent.len()).rev() {
        let (item, support) = frequent[rank];
        suffix.push(item);
        let mut itemset = suffix.clone();
        itemset.sort_unstable();
        out.push((itemset, support));

        let base: Vec<(Vec<u32>, u64)> = tree.header[rank]
            .iter()
            .filter_map(|&node| {
                let prefix = tree.prefix_path(node);
                if prefix.is_empty() {
                    None
                } else {
                    Some((prefix.iter().map(|&r| frequent[r].0).collect(), tree.nodes[node].count))
                }
            })
            .collect();
        if !base.is_empty() && suffix.len() < max_len {
            mine(base, min_support, max_len, suffix, out);
        }
        suffix.pop();
    }
}

/// All itemsets contained in at least `min_support` transactions (values
/// below 1 are treated as 1), with exact supports and supporting posts.
/// Patterns come out ordered by length, then lexicographically.
pub fn fp_growth(transactions: &[Transaction], min_support: u64) -> Vec<Pattern> {
    fp_growth_bounded(transactions, min_support, None)
}

/// [`fp_growth`] limited to itemsets of at most `max_len` items. Low
/// supports over near-duplicate posts otherwise enumerate every subset.
pub fn fp_growth_bounded(transactions: &[Transaction], min_support: u64, max_len: Option<usize>) -> Vec<Pattern> {
    let min_support = min_support.max(1);
    let max_len = max_len.unwrap_or(usize::MAX).max(1);
    let vocab = Vocab::new(transactions);
    let encoded = vocab.encode(transactions);
    let paths: Vec<(Vec<u32>, u64)> = encoded.iter().filter(|t| !t.is_empty()).map(|t| (t.clone(), 1)).collect();

    let mut raw = Vec::new();
    mine(paths, min_support, max_len, &mut Vec::new(), &mut raw);

    let tid_sets = vocab.tid_sets(&encoded);
    let mut patterns: Vec<Pattern> = raw
        .into_iter()
        .map(|(ids, support)| {
            let posts = cover(&ids, &tid_sets, transactions.len());
            debug_assert_eq!(posts.count() as u64, support);
            Pattern {
                items: ids.iter().map(|&i| vocab.words[i as usize].clone()).collect(),
                support,
                utility: None,
                post_ids: post_ids_of(&posts, transactions),
            }
        })
        .collect();
    patterns.sort_by(|a, b| a.items.len().cmp(&b.items.len()).then_with(|| a.items.cmp(&b.items)));
    patterns
}

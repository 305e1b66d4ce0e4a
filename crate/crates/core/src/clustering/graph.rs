//! Weighted similarity graphs, shared-nearest-neighbour clustering and
//! greedy modularity communities.

use std::collections::BTreeMap;

use super::canonical_labels;

/// Undirected graph with positive edge weights and no self-loops.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimilarityGraph {
    adj: Vec<BTreeMap<usize, f64>>,
}

impl SimilarityGraph {
    pub fn new(nodes: usize) -> Self {
        SimilarityGraph {
            adj: vec![BTreeMap::new(); nodes],
        }
    }

    /// Sets the weight of `{u, v}`. Self-loops and non-positive weights
    /// are ignored.
    pub fn add_edge(&mut self, u: usize, v: usize, weight: f64) {
        if u == v || !(weight > 0.0) {
            return;
        }
        self.adj[u].insert(v, weight);
        self.adj[v].insert(u, weight);
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(BTreeMap::len).sum::<usize>() / 2
    }

    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.adj[u].get(&v).copied().unwrap_or(0.0)
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.adj[u].iter().map(|(&v, &w)| (v, w))
    }

    /// Each undirected edge once, as `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, m)| m.range(u + 1..).map(move |(&v, &w)| (u, v, w)))
    }

    fn strength(&self, u: usize) -> f64 {
        self.adj[u].values().sum()
    }

    /// The `k` heaviest neighbours, extended by any tied with the `k`-th.
    /// Keeping ties makes the list independent of node numbering.
    fn nearest(&self, u: usize, k: usize) -> Vec<usize> {
        if k == 0 {
            return Vec::new();
        }
        let mut ns: Vec<(usize, f64)> = self.neighbors(u).collect();
        ns.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        if ns.len() > k {
            let cut = ns[k - 1].1;
            ns.retain(|&(_, w)| w >= cut);
        }
        let mut out: Vec<usize> = ns.into_iter().map(|(v, _)| v).collect();
        out.sort_unstable();
        out
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Jarvis-Patrick clustering: two nodes are linked when each is among the
/// other's `k` nearest neighbours and their neighbour lists share at least
/// `k_min` nodes. Clusters are the connected components of those links,
/// numbered by their lowest node.
pub fn jarvis_patrick(graph: &SimilarityGraph, k: usize, k_min: usize) -> Vec<usize> {
    let n = graph.node_count();
    let lists: Vec<Vec<usize>> = (0..n).map(|u| graph.nearest(u, k)).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    for u in 0..n {
        for &v in &lists[u] {
            if v < u || lists[v].binary_search(&u).is_err() {
                continue;
            }
            let shared = lists[u].iter().filter(|x| lists[v].binary_search(x).is_ok()).count();
            if shared >= k_min {
                let (a, b) = (find(&mut parent, u), find(&mut parent, v));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|u| find(&mut parent, u)).collect();
    canonical_labels(&roots)
}

/// Weighted modularity `Q = sum_c [ e_cc - a_c^2 ]` of a labelling.
pub fn modularity(graph: &SimilarityGraph, labels: &[usize]) -> f64 {
    let two_w: f64 = (0..graph.node_count()).map(|u| graph.strength(u)).sum();
    if two_w == 0.0 {
        return 0.0;
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut inside = vec![0.0; k];
    let mut degree = vec![0.0; k];
    for u in 0..graph.node_count() {
        degree[labels[u]] += graph.strength(u);
        for (v, w) in graph.neighbors(u) {
            if labels[v] == labels[u] {
                inside[labels[u]] += w;
            }
        }
    }
    inside.iter().zip(&degree).map(|(i, d)| i / two_w - (d / two_w).powi(2)).sum()
}

/// Greedy agglomerative modularity maximisation (Clauset-Newman-Moore).
/// Only communities joined by an edge are merged; the partition with the
/// highest `Q` seen along the way is returned with that `Q`.
pub fn newman_communities(graph: &SimilarityGraph) -> (Vec<usize>, f64) {
    let n = graph.node_count();
    let two_w: f64 = (0..n).map(|u| graph.strength(u)).sum();
    let singletons: Vec<usize> = (0..n).collect();
    if two_w == 0.0 {
        return (singletons, 0.0);
    }
    let mut a: Vec<f64> = (0..n).map(|u| graph.strength(u) / two_w).collect();
    let mut e: Vec<BTreeMap<usize, f64>> = (0..n).map(|u| graph.neighbors(u).map(|(v, w)| (v, w / two_w)).collect()).collect();
    let mut alive = vec![true; n];
    let mut owner: Vec<usize> = (0..n).collect();
    let mut q: f64 = -a.iter().map(|x| x * x).sum::<f64>();
    let mut best = (owner.clone(), q);

    loop {
        let mut step: Option<(f64, usize, usize)> = None;
        for i in (0..n).filter(|&i| alive[i]) {
            for (&j, &eij) in e[i].range(i + 1..) {
                let dq = 2.0 * (eij - a[i] * a[j]);
                if step.is_none_or(|(s, _, _)| dq > s) {
                    step = Some((dq, i, j));
                }
            }
        }
        let Some((dq, i, j)) = step else { break };
        // fold j into i
        let row_j = std::mem::take(&mut e[j]);
        for (k, ejk) in row_j {
            if k == i {
                continue;
            }
            *e[i].entry(k).or_insert(0.0) += ejk;
            let row_k = &mut e[k];
            row_k.remove(&j);
            *row_k.entry(i).or_insert(0.0) += ejk;
        }
        e[i].remove(&j);
        a[i] += a[j];
        a[j] = 0.0;
        alive[j] = false;
        for o in owner.iter_mut() {
            if *o == j {
                *o = i;
            }
        }
        q += dq;
        if q > best.1 {
            best = (owner.clone(), q);
        }
    }
    let labels = canonical_labels(&best.0);
    // report Q of the returned labels directly rather than the running sum
    let q = modularity(graph, &labels);
    (labels, q)
}

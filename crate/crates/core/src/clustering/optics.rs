//! OPTICS ordering with ξ-steep cluster extraction.
//!
//! The ξ method yields a hierarchy of nested intervals over the ordering.
//! Labels come from an excess-of-mass pass over that hierarchy: a cluster
//! is replaced by its children only when they hold more mass (measured in
//! reachability distance below the cluster's birth level) than the parent
//! does on its own. Picking leaves instead tends to shatter compact groups
//! into fragments and noise.

use super::{check_dims, distance_matrix, ClusterError, Metric};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticsConfig {
    pub min_pts: usize,
    pub xi: f64,
    pub metric: Metric,
    /// Smallest interval accepted as a cluster; `min_pts` when unset.
    pub min_cluster_size: Option<usize>,
}

impl Default for OpticsConfig {
    fn default() -> Self {
        OpticsConfig {
            min_pts: 5,
            xi: 0.05,
            metric: Metric::Cosine,
            min_cluster_size: None,
        }
    }
}

/// The reachability plot. Vectors other than `ordering` are indexed by point.
#[derive(Debug, Clone, PartialEq)]
pub struct Optics {
    pub ordering: Vec<usize>,
    pub reachability: Vec<f64>,
    pub core_distance: Vec<f64>,
    pub predecessor: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpticsResult {
    pub optics: Optics,
    /// All ξ clusters as inclusive `(start, end)` positions in the ordering.
    pub hierarchy: Vec<(usize, usize)>,
    /// Cluster per point; `None` is noise.
    pub labels: Vec<Option<usize>>,
}

/// Computes the cluster ordering. A point's core distance is the distance
/// to its `min_pts`-th nearest point, counting itself.
pub fn optics_order(dist: &[Vec<f64>], min_pts: usize) -> Optics {
    let n = dist.len();
    let core_distance: Vec<f64> = dist
        .iter()
        .map(|row| {
            if min_pts == 0 || min_pts > n {
                return f64::INFINITY;
            }
            let mut sorted = row.clone();
            sorted.sort_by(f64::total_cmp);
            sorted[min_pts - 1]
        })
        .collect();

    let mut reachability = vec![f64::INFINITY; n];
    let mut predecessor = vec![None; n];
    let mut processed = vec![false; n];
    let mut ordering = Vec::with_capacity(n);
    for _ in 0..n {
        // Unprocessed point with the smallest reachability; lowest index on ties.
        let point = (0..n)
            .filter(|&i| !processed[i])
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if reachability[b] <= reachability[i] => Some(b),
                _ => Some(i),
            })
            .expect("an unprocessed point remains");
        processed[point] = true;
        ordering.push(point);
        let core = core_distance[point];
        if core.is_finite() {
            for q in 0..n {
                if processed[q] {
                    continue;
                }
                let r = dist[point][q].max(core);
                if r < reachability[q] {
                    reachability[q] = r;
                    predecessor[q] = Some(point);
                }
            }
        }
    }
    Optics {
        ordering,
        reachability,
        core_distance,
        predecessor,
    }
}

struct SteepDown {
    start: usize,
    end: usize,
    mib: f64,
}

fn extend_region(steep: &[bool], xward: &[bool], start: usize, min_pts: usize) -> usize {
    let mut non_xward = 0;
    let mut end = start;
    for index in start..steep.len() {
        if steep[index] {
            non_xward = 0;
            end = index;
        } else if !xward[index] {
            // not steep, but still heading the same way
            non_xward += 1;
            if non_xward > min_pts {
                break;
            }
        } else {
            return end;
        }
    }
    end
}

fn update_filter(sdas: &mut Vec<SteepDown>, mib: f64, xi_complement: f64, plot: &[f64]) {
    if mib.is_infinite() {
        sdas.clear();
        return;
    }
    sdas.retain(|d| mib <= plot[d.start] * xi_complement);
    for d in sdas.iter_mut() {
        d.mib = d.mib.max(mib);
    }
}

fn correct_predecessor(plot: &[f64], pred_plot: &[Option<usize>], ordering: &[usize], s: usize, mut e: usize) -> Option<(usize, usize)> {
    while s < e {
        if plot[s] > plot[e] {
            return Some((s, e));
        }
        if let Some(p) = pred_plot[e] {
            if ordering[s..e].contains(&p) {
                return Some((s, e));
            }
        }
        e -= 1;
    }
    None
}

/// ξ-steep cluster intervals, smaller clusters before the ones enclosing them.
pub fn xi_clusters(optics: &Optics, xi: f64, min_pts: usize, min_cluster_size: usize) -> Vec<(usize, usize)> {
    let n = optics.ordering.len();
    let mut plot: Vec<f64> = optics.ordering.iter().map(|&p| optics.reachability[p]).collect();
    plot.push(f64::INFINITY);
    let pred_plot: Vec<Option<usize>> = optics.ordering.iter().map(|&p| optics.predecessor[p]).collect();

    let xi_complement = 1.0 - xi;
    let ratio: Vec<f64> = (0..n).map(|i| plot[i] / plot[i + 1]).collect();
    let steep_up: Vec<bool> = ratio.iter().map(|&r| r <= xi_complement).collect();
    let steep_down: Vec<bool> = ratio.iter().map(|&r| r >= 1.0 / xi_complement).collect();
    let downward: Vec<bool> = ratio.iter().map(|&r| r > 1.0).collect();
    let upward: Vec<bool> = ratio.iter().map(|&r| r < 1.0).collect();

    let mut sdas: Vec<SteepDown> = Vec::new();
    let mut clusters = Vec::new();
    let mut index = 0;
    let mut mib = 0.0f64;
    for steep_index in 0..n {
        if !(steep_up[steep_index] || steep_down[steep_index]) || steep_index < index {
            continue;
        }
        mib = plot[index..=steep_index].iter().fold(mib, |a, &b| a.max(b));
        update_filter(&mut sdas, mib, xi_complement, &plot);

        if steep_down[steep_index] {
            let end = extend_region(&steep_down, &upward, steep_index, min_pts);
            sdas.push(SteepDown {
                start: steep_index,
                end,
                mib: 0.0,
            });
            index = end + 1;
            mib = plot[index];
            continue;
        }

        let u_start = steep_index;
        let u_end = extend_region(&steep_up, &downward, u_start, min_pts);
        index = u_end + 1;
        mib = plot[index];

        let mut found = Vec::new();
        for d in &sdas {
            let mut c_start = d.start;
            let mut c_end = u_end;
            if plot[c_end + 1] * xi_complement < d.mib {
                continue;
            }
            let d_max = plot[d.start];
            if d_max * xi_complement >= plot[c_end + 1] {
                while plot[c_start + 1] > plot[c_end + 1] && c_start < d.end {
                    c_start += 1;
                }
            } else if plot[c_end + 1] * xi_complement >= d_max {
                while c_end > u_start && plot[c_end - 1] > d_max {
                    c_end -= 1;
                }
            }
            let Some((s, e)) = correct_predecessor(&plot, &pred_plot, &optics.ordering, c_start, c_end) else {
                continue;
            };
            if e - s + 1 < min_cluster_size || s > d.end || e < u_start {
                continue;
            }
            found.push((s, e));
        }
        found.reverse();
        clusters.extend(found);
    }
    clusters
}

/// Maximal intervals of `pool` strictly inside `outer`, without overlaps.
fn children(outer: (usize, usize), pool: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let inside: Vec<(usize, usize)> = pool
        .iter()
        .copied()
        .filter(|&c| c != outer && outer.0 <= c.0 && c.1 <= outer.1)
        .collect();
    let mut maximal: Vec<(usize, usize)> = inside
        .iter()
        .copied()
        .filter(|&c| !inside.iter().any(|&o| o != c && o.0 <= c.0 && c.1 <= o.1))
        .collect();
    maximal.sort_by_key(|&(s, e)| (s, std::cmp::Reverse(e)));
    let mut kept: Vec<(usize, usize)> = Vec::new();
    for c in maximal {
        match kept.last() {
            Some(&(_, end)) if c.0 <= end => {}
            _ => kept.push(c),
        }
    }
    kept
}

/// Chooses a flat set of disjoint clusters from the ξ hierarchy.
///
/// A cluster `C` is born at the lower of its two boundary reachabilities
/// and, when it has several children, dies at the highest ridge between
/// them. Its own mass is `sum_p (birth - max(r_p, death))` over its
/// interior points. Children replace `C` when their combined best mass
/// exceeds that; roughly, when the ridge between them stands more than
/// halfway up from their floor to the level where `C` separates.
pub fn select_clusters(optics: &Optics, hierarchy: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let n = optics.ordering.len();
    if n == 0 {
        return Vec::new();
    }
    let mut plot: Vec<f64> = optics.ordering.iter().map(|&p| optics.reachability[p]).collect();
    plot.push(f64::INFINITY);

    let mut pool: Vec<(usize, usize)> = hierarchy.to_vec();
    pool.sort_unstable();
    pool.dedup();

    // Returns (mass, chosen clusters) for the best selection inside `c`.
    fn best(c: (usize, usize), pool: &[(usize, usize)], plot: &[f64]) -> (f64, Vec<(usize, usize)>) {
        let kids = children(c, pool);
        let birth = plot[c.0].min(plot[c.1 + 1]);
        let death = if kids.len() >= 2 {
            kids.windows(2)
                .map(|w| plot[w[0].1 + 1..=w[1].0].iter().copied().fold(0.0f64, f64::max))
                .fold(0.0f64, f64::max)
        } else {
            0.0
        };
        let own: f64 = (c.0 + 1..=c.1).map(|p| (birth - plot[p].max(death)).max(0.0)).sum();
        if kids.len() < 2 {
            return (own, vec![c]);
        }
        let mut total = 0.0;
        let mut chosen = Vec::new();
        for k in kids {
            let (mass, sel) = best(k, pool, plot);
            total += mass;
            chosen.extend(sel);
        }
        if total > own {
            (total, chosen)
        } else {
            (own, vec![c])
        }
    }

    let root = (0, n - 1);
    let without_root: Vec<(usize, usize)> = pool.iter().copied().filter(|&c| c != root).collect();
    // Everything sits inside a virtual interval one wider than the plot.
    let tops = children((0, n), &without_root);
    if tops.is_empty() {
        return if pool.contains(&root) { vec![root] } else { Vec::new() };
    }
    tops.into_iter().flat_map(|t| best(t, &without_root, &plot).1).collect()
}

/// OPTICS with ξ extraction. Fewer points than `min_pts` leaves everything noise.
pub fn optics(points: &[Vec<f64>], cfg: &OpticsConfig) -> Result<OpticsResult, ClusterError> {
    if cfg.min_pts < 2 {
        return Err(ClusterError::InvalidParameter(format!("min_pts must be at least 2, got {}", cfg.min_pts)));
    }
    if !(0.0..1.0).contains(&cfg.xi) || cfg.xi == 0.0 {
        return Err(ClusterError::InvalidParameter(format!("xi must lie in (0, 1), got {}", cfg.xi)));
    }
    check_dims(points)?;
    let dist = distance_matrix(points, cfg.metric);
    let order = optics_order(&dist, cfg.min_pts);
    if points.len() < cfg.min_pts {
        return Ok(OpticsResult {
            optics: order,
            hierarchy: Vec::new(),
            labels: vec![None; points.len()],
        });
    }
    let min_size = cfg.min_cluster_size.unwrap_or(cfg.min_pts).max(2);
    let hierarchy = xi_clusters(&order, cfg.xi, cfg.min_pts, min_size);
    let mut selected = select_clusters(&order, &hierarchy);
    selected.sort_unstable();
    let mut labels = vec![None; points.len()];
    for (label, &(s, e)) in selected.iter().enumerate() {
        for &p in &order.ordering[s..=e] {
            labels[p] = Some(label);
        }
    }
    Ok(OpticsResult {
        optics: order,
        hierarchy,
        labels,
    })
}

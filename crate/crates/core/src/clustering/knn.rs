//! Nearest-neighbour labelling by cosine similarity.

fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}

/// Majority label of the `k` most similar exemplars. Returns `None`
/// (unclassified) when the best similarity is below `tau` or there is
/// nothing to compare with. Vote ties go to the label with the larger
/// summed similarity, then to the smaller label.
pub fn knn_classify<L: Clone + Ord>(item: &[f64], labeled: &[(Vec<f64>, L)], k: usize, tau: f64) -> Option<L> {
    if labeled.is_empty() || k == 0 {
        return None;
    }
    let mut sims: Vec<(f64, &L)> = labeled.iter().map(|(v, l)| (cosine_similarity(item, v), l)).collect();
    sims.sort_by(|a, b| b.0.total_cmp(&a.0));
    if sims[0].0 < tau {
        return None;
    }
    let mut votes: Vec<(&L, usize, f64)> = Vec::new();
    for &(s, l) in sims.iter().take(k) {
        match votes.iter_mut().find(|v| v.0 == l) {
            Some(v) => {
                v.1 += 1;
                v.2 += s;
            }
            None => votes.push((l, 1, s)),
        }
    }
    votes
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(a.2.total_cmp(&b.2)).then_with(|| b.0.cmp(a.0)))
        .map(|v| v.0.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set() -> Vec<(Vec<f64>, &'static str)> {
        vec![
            (vec![1.0, 0.0], "A"),
            (vec![0.9, 0.1], "A"),
            (vec![0.8, 0.3], "B"),
            (vec![0.0, 1.0], "C"),
        ]
    }

    #[test]
    fn exact_exemplar_wins() {
        assert_eq!(knn_classify(&[0.0, 2.0], &set(), 1, 0.5), Some("C"));
    }

    #[test]
    fn majority_of_three() {
        assert_eq!(knn_classify(&[1.0, 0.05], &set(), 3, 0.5), Some("A"));
    }

    #[test]
    fn below_threshold_or_empty_is_unclassified() {
        assert_eq!(knn_classify(&[-1.0, -1.0], &set(), 3, 0.5), None);
        assert_eq!(knn_classify::<&str>(&[1.0, 0.0], &[], 3, 0.5), None);
    }

    #[test]
    fn vote_tie_goes_to_higher_total_similarity() {
        let labeled = vec![(vec![1.0, 0.0], "far"), (vec![0.0, 1.0], "near")];
        assert_eq!(knn_classify(&[0.3, 1.0], &labeled, 2, 0.1), Some("near"));
    }
}

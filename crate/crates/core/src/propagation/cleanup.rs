//! Peeling low-degree vertices until the label-restricted subgraph has
//! minimum degree at least `δ²/4 · |V|`.

use std::collections::BTreeSet;

use serde::Serialize;

use super::graph::{MatchingGraph, Restricted};
use super::PropagationError;

const EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CleanupResult {
    /// Surviving vertices V′, sorted.
    pub kept: Vec<usize>,
    /// Vertices removed, in removal order.
    pub removed: Vec<usize>,
    /// Minimum degree of the label-restricted subgraph on V′.
    pub min_degree: usize,
    /// `δ²/4 · |V|`.
    pub threshold: f64,
}

/// Labels of the active set whose restricted matching has fewer than
/// `min_edges` edges.
pub fn short_matchings<G: MatchingGraph>(g: &G, active: &[bool], min_edges: f64) -> Vec<usize> {
    let r = Restricted::new(g, active);
    (0..g.vertex_count())
        .filter(|&l| active[l] && (r.matching_len(l) as f64) < min_edges - EPS)
        .collect()
}

/// Checks that all but `0.1δ|V|` labels of the active set keep at least
/// `0.9δ|V|` edges inside it.
pub fn check_cleanup_precondition<G: MatchingGraph>(
    g: &G,
    active: &[bool],
    delta: f64,
) -> Result<(), PropagationError> {
    let size = active.iter().filter(|&&a| a).count() as f64;
    let short = short_matchings(g, active, 0.9 * delta * size);
    if short.len() as f64 > 0.1 * delta * size + EPS {
        return Err(PropagationError::Precondition(format!(
            "{} matchings have fewer than 0.9·δ·|V| = {:.3} edges; at most {:.3} allowed",
            short.len(),
            0.9 * delta * size,
            0.1 * delta * size
        )));
    }
    Ok(())
}

/// Removes, one at a time, the lowest-index vertex of minimum degree together
/// with every edge it labels, until the minimum degree reaches `δ²/4 · |V|`.
pub fn cleanup<G: MatchingGraph>(g: &G, active: &[bool], delta: f64) -> Result<CleanupResult, PropagationError> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(PropagationError::InvalidParams(format!("delta {delta} outside (0, 1]")));
    }
    check_cleanup_precondition(g, active, delta)?;
    let n = g.vertex_count();
    let size = active.iter().filter(|&&a| a).count();
    let threshold = delta * delta / 4.0 * size as f64;
    let floor = delta * size as f64;

    let mut alive = active.to_vec();
    let mut degree = vec![0usize; n];
    let restricted = Restricted::new(g, active);
    let mut max_degree = 0;
    for v in (0..n).filter(|&v| active[v]) {
        degree[v] = restricted.degree(v);
        max_degree = max_degree.max(degree[v]);
    }
    let mut buckets: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); max_degree + 1];
    for v in (0..n).filter(|&v| active[v]) {
        buckets[degree[v]].insert(v as u32);
    }
    let mut min = 0;
    let mut remaining = size;
    let mut removed = Vec::new();
    loop {
        while min < buckets.len() && buckets[min].is_empty() {
            min += 1;
        }
        if min >= buckets.len() || (min as f64) >= threshold - EPS {
            break;
        }
        let v = *buckets[min].first().expect("bucket is nonempty") as usize;
        buckets[min].remove(&(v as u32));
        alive[v] = false;
        remaining -= 1;
        removed.push(v);
        let mut touched = Vec::new();
        g.for_each_incident(v, |w, l| {
            if alive[w] && alive[l] {
                touched.push(w);
            }
        });
        g.for_each_labeled(v, |u, w| {
            if alive[u] && alive[w] {
                touched.push(u);
                touched.push(w);
            }
        });
        for w in touched {
            buckets[degree[w]].remove(&(w as u32));
            degree[w] -= 1;
            buckets[degree[w]].insert(w as u32);
            min = min.min(degree[w]);
        }
        if (remaining as f64) < floor - EPS {
            return Err(PropagationError::Invariant(format!(
                "cleanup shrank V to {remaining} < δ|V| = {floor:.3}"
            )));
        }
    }
    let kept: Vec<usize> = (0..n).filter(|&v| alive[v]).collect();
    let min_degree = kept.iter().map(|&v| degree[v]).min().unwrap_or(0);
    Ok(CleanupResult {
        kept,
        removed,
        min_degree,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::generate::{gen_instance, InstanceKind, InstanceParams};
    use crate::propagation::graph::{LabeledMatchingGraph, RoundRobinMatchings};

    /// Same peeling order, recomputing every degree from scratch each step.
    fn rescan(g: &LabeledMatchingGraph, active: &[bool], delta: f64) -> Vec<usize> {
        let size = active.iter().filter(|&&a| a).count();
        let threshold = delta * delta / 4.0 * size as f64;
        let mut alive = active.to_vec();
        let mut removed = Vec::new();
        loop {
            let r = Restricted::new(g, &alive);
            let best = (0..g.vertex_count())
                .filter(|&v| alive[v])
                .map(|v| (r.degree(v), v))
                .min();
            match best {
                Some((d, v)) if (d as f64) < threshold - EPS => {
                    alive[v] = false;
                    removed.push(v);
                }
                _ => return removed,
            }
        }
    }

    #[test]
    fn nothing_to_remove() {
        let g = RoundRobinMatchings::new(16).unwrap();
        let active = vec![true; 16];
        let r = cleanup(&g, &active, g.delta()).unwrap();
        assert_eq!(r.kept.len(), 16);
        assert!(r.removed.is_empty());
        assert!(r.min_degree as f64 >= r.threshold);
    }

    #[test]
    fn precondition_violation() {
        let g = LabeledMatchingGraph::new(8, 0.5, vec![vec![]; 8]).unwrap();
        let err = cleanup(&g, &[true; 8], 0.5).unwrap_err();
        assert!(matches!(err, PropagationError::Precondition(_)));
    }

    #[test]
    fn agrees_with_rescan_and_meets_postconditions() {
        for seed in 0..20 {
            let params = InstanceParams { n: 60, delta: 0.3 };
            let base = gen_instance(InstanceKind::Random, params, seed).unwrap();
            // empty a few labels (within the 0.1δ|V| allowance)
            let json = base.to_json();
            let mut matchings: Vec<Vec<(usize, usize)>> = json
                .matchings
                .iter()
                .map(|m| m.iter().map(|&[u, w]| (u, w)).collect())
                .collect();
            for l in 0..(0.1 * 0.3 * 60.0) as usize {
                matchings[(l * 7 + seed as usize) % 60].clear();
            }
            let g = LabeledMatchingGraph::new(60, 0.3, matchings).unwrap();
            let active = vec![true; 60];
            let r = cleanup(&g, &active, 0.3).unwrap();
            assert_eq!(r.removed, rescan(&g, &active, 0.3), "seed {seed}");
            assert!(r.min_degree as f64 >= r.threshold);
            assert!(r.kept.len() as f64 >= 0.3 * 60.0);
            let mut mask = vec![false; 60];
            r.kept.iter().for_each(|&v| mask[v] = true);
            let sub = Restricted::new(&g, &mask);
            assert!(r.kept.iter().all(|&v| sub.degree(v) >= r.min_degree));
        }
    }
}

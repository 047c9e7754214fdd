//! Matching-labeled graphs: explicit adjacency, implicit families, and the
//! augmented / restricted views the seed search works on.

use serde::{Deserialize, Serialize};

use super::PropagationError;

/// A graph on `[n]` whose edges carry labels in `[n]`; the edges of each label
/// form a matching avoiding the label itself.
pub trait MatchingGraph: Sync {
    fn vertex_count(&self) -> usize;

    /// Nominal matching-size fraction δ.
    fn delta(&self) -> f64;

    /// Calls `f(neighbor, label)` for every edge at `v`.
    fn for_each_incident(&self, v: usize, f: impl FnMut(usize, usize));

    /// Calls `f(u, w)` for every edge of matching `label`.
    fn for_each_labeled(&self, label: usize, f: impl FnMut(usize, usize));

    fn matching_len(&self, label: usize) -> usize {
        let mut count = 0;
        self.for_each_labeled(label, |_, _| count += 1);
        count
    }

    fn edge_count(&self) -> usize {
        (0..self.vertex_count()).map(|l| self.matching_len(l)).sum()
    }

    fn degree(&self, v: usize) -> usize {
        let mut count = 0;
        self.for_each_incident(v, |_, _| count += 1);
        count
    }
}

impl<G: MatchingGraph> MatchingGraph for &G {
    fn vertex_count(&self) -> usize {
        (**self).vertex_count()
    }

    fn delta(&self) -> f64 {
        (**self).delta()
    }

    fn for_each_incident(&self, v: usize, f: impl FnMut(usize, usize)) {
        (**self).for_each_incident(v, f)
    }

    fn for_each_labeled(&self, label: usize, f: impl FnMut(usize, usize)) {
        (**self).for_each_labeled(label, f)
    }

    fn matching_len(&self, label: usize) -> usize {
        (**self).matching_len(label)
    }
}

/// A graph stored as explicit per-label edge lists plus a CSR incidence index.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledMatchingGraph {
    n: usize,
    delta: f64,
    matchings: Vec<Vec<(u32, u32)>>,
    offsets: Vec<usize>,
    incidence: Vec<(u32, u32)>,
}

/// On-disk instance format.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceJson {
    pub n: usize,
    pub delta: f64,
    pub matchings: Vec<Vec<[usize; 2]>>,
}

impl LabeledMatchingGraph {
    /// Validates the matching invariants and builds the incidence index.
    pub fn new(n: usize, delta: f64, matchings: Vec<Vec<(usize, usize)>>) -> Result<Self, PropagationError> {
        if n > u32::MAX as usize {
            return Err(PropagationError::InvalidParams(format!("n = {n} too large")));
        }
        if matchings.len() != n {
            return Err(PropagationError::InvalidInstance(format!(
                "{} matchings for {n} labels",
                matchings.len()
            )));
        }
        if !(delta.is_finite() && delta > 0.0 && delta <= 1.0) {
            return Err(PropagationError::InvalidInstance(format!("delta {delta} outside (0, 1]")));
        }
        let mut stamp = vec![usize::MAX; n];
        let mut stored = Vec::with_capacity(n);
        let mut degree = vec![0usize; n];
        for (label, edges) in matchings.into_iter().enumerate() {
            let mut list = Vec::with_capacity(edges.len());
            for (u, w) in edges {
                let bad = |reason: String| PropagationError::InvalidInstance(format!("label {label}: {reason}"));
                if u >= n || w >= n {
                    return Err(bad(format!("edge ({u}, {w}) out of range")));
                }
                if u == w {
                    return Err(bad(format!("self-loop at {u}")));
                }
                if u == label || w == label {
                    return Err(bad(format!("edge ({u}, {w}) touches its own label")));
                }
                for x in [u, w] {
                    if stamp[x] == label {
                        return Err(bad(format!("vertex {x} covered twice")));
                    }
                    stamp[x] = label;
                    degree[x] += 1;
                }
                list.push((u.min(w) as u32, u.max(w) as u32));
            }
            stored.push(list);
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut fill = offsets.clone();
        let mut incidence = vec![(0u32, 0u32); offsets[n]];
        for (label, edges) in stored.iter().enumerate() {
            for &(u, w) in edges {
                incidence[fill[u as usize]] = (w, label as u32);
                fill[u as usize] += 1;
                incidence[fill[w as usize]] = (u, label as u32);
                fill[w as usize] += 1;
            }
        }
        Ok(Self {
            n,
            delta,
            matchings: stored,
            offsets,
            incidence,
        })
    }

    pub fn from_json(json: InstanceJson) -> Result<Self, PropagationError> {
        let matchings = json
            .matchings
            .into_iter()
            .map(|m| m.into_iter().map(|[u, w]| (u, w)).collect())
            .collect();
        Self::new(json.n, json.delta, matchings)
    }

    /// Copies any matching graph into explicit form.
    pub fn materialize<G: MatchingGraph>(g: &G) -> Self {
        let n = g.vertex_count();
        let matchings = (0..n)
            .map(|l| {
                let mut edges = Vec::with_capacity(g.matching_len(l));
                g.for_each_labeled(l, |u, w| edges.push((u, w)));
                edges
            })
            .collect();
        Self::new(n, g.delta(), matchings).expect("source graph satisfies the matching invariants")
    }

    pub fn to_json(&self) -> InstanceJson {
        InstanceJson {
            n: self.n,
            delta: self.delta,
            matchings: self
                .matchings
                .iter()
                .map(|m| m.iter().map(|&(u, w)| [u as usize, w as usize]).collect())
                .collect(),
        }
    }

    pub fn matching(&self, label: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.matchings[label].iter().map(|&(u, w)| (u as usize, w as usize))
    }
}

impl MatchingGraph for LabeledMatchingGraph {
    fn vertex_count(&self) -> usize {
        self.n
    }

    fn delta(&self) -> f64 {
        self.delta
    }

    fn for_each_incident(&self, v: usize, mut f: impl FnMut(usize, usize)) {
        for &(w, l) in &self.incidence[self.offsets[v]..self.offsets[v + 1]] {
            f(w as usize, l as usize);
        }
    }

    fn for_each_labeled(&self, label: usize, mut f: impl FnMut(usize, usize)) {
        for &(u, w) in &self.matchings[label] {
            f(u as usize, w as usize);
        }
    }

    fn matching_len(&self, label: usize) -> usize {
        self.matchings[label].len()
    }

    fn edge_count(&self) -> usize {
        self.incidence.len() / 2
    }

    fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }
}

/// The matchings of the Hadamard corrector on `n = 2^r` positions:
/// `M_a = {{ξ, a⊕ξ}}` without the pair touching `a` and 0, and
/// `M_0 = {{ξ, ξ⊕1} : ξ even, ξ ≥ 2}`. Every matching has `n/2 − 1` edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HadamardMatchings {
    n: usize,
}

impl HadamardMatchings {
    pub fn new(n: usize) -> Result<Self, PropagationError> {
        if n < 4 || !n.is_power_of_two() {
            return Err(PropagationError::InvalidParams(format!(
                "n must be a power of two and at least 4, got {n}"
            )));
        }
        Ok(Self { n })
    }
}

impl MatchingGraph for HadamardMatchings {
    fn vertex_count(&self) -> usize {
        self.n
    }

    fn delta(&self) -> f64 {
        (self.n / 2 - 1) as f64 / self.n as f64
    }

    fn for_each_incident(&self, v: usize, mut f: impl FnMut(usize, usize)) {
        if v == 0 {
            return;
        }
        if v >= 2 {
            f(v ^ 1, 0);
        }
        for a in 1..self.n {
            if a != v {
                f(v ^ a, a);
            }
        }
    }

    fn for_each_labeled(&self, label: usize, mut f: impl FnMut(usize, usize)) {
        if label == 0 {
            for xi in (2..self.n).step_by(2) {
                f(xi, xi + 1);
            }
            return;
        }
        for xi in 1..self.n {
            if xi < (xi ^ label) {
                f(xi, xi ^ label);
            }
        }
    }

    fn matching_len(&self, _label: usize) -> usize {
        self.n / 2 - 1
    }

    fn edge_count(&self) -> usize {
        self.n * (self.n / 2 - 1)
    }
}

/// `n` near-perfect matchings from the round-robin factorization of `K_n`:
/// label `i` uses round `(i+1) mod (n−1)` minus the edge touching `i`. The
/// shift keeps the hub vertex `n−1` from always being paired with the label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoundRobinMatchings {
    n: usize,
}

impl RoundRobinMatchings {
    pub fn new(n: usize) -> Result<Self, PropagationError> {
        if n < 4 || n % 2 != 0 {
            return Err(PropagationError::InvalidParams(format!(
                "n must be even and at least 4, got {n}"
            )));
        }
        Ok(Self { n })
    }

    /// Partner of `v` in round `r`.
    pub fn partner(&self, v: usize, r: usize) -> usize {
        let m = self.n - 1;
        if v == m {
            r
        } else if v == r {
            m
        } else {
            (2 * r + m - v) % m
        }
    }

    /// Round used by matching `label`.
    pub fn round(&self, label: usize) -> usize {
        (label + 1) % (self.n - 1)
    }
}

impl MatchingGraph for RoundRobinMatchings {
    fn vertex_count(&self) -> usize {
        self.n
    }

    fn delta(&self) -> f64 {
        (self.n / 2 - 1) as f64 / self.n as f64
    }

    fn for_each_incident(&self, v: usize, mut f: impl FnMut(usize, usize)) {
        for label in 0..self.n {
            if label == v {
                continue;
            }
            let w = self.partner(v, self.round(label));
            if w != label {
                f(w, label);
            }
        }
    }

    fn for_each_labeled(&self, label: usize, mut f: impl FnMut(usize, usize)) {
        let r = self.round(label);
        for u in 0..self.n {
            let w = self.partner(u, r);
            if u < w && u != label && w != label {
                f(u, w);
            }
        }
    }

    fn matching_len(&self, _label: usize) -> usize {
        self.n / 2 - 1
    }
}

/// Replaces the matchings of the given labels by dummy matchings
/// `{{i+1+2t, i+2+2t} mod n : t < size}`.
pub struct Augmented<G> {
    base: G,
    dummy: Vec<bool>,
    dummy_labels: Vec<usize>,
    size: usize,
}

impl<G: MatchingGraph> Augmented<G> {
    pub fn new(base: G, labels: &[usize], size: usize) -> Result<Self, PropagationError> {
        let n = base.vertex_count();
        if !labels.is_empty() && 2 * size > n.saturating_sub(1) {
            return Err(PropagationError::InvalidParams(format!(
                "dummy matchings of {size} edges do not fit in {n} vertices"
            )));
        }
        let mut dummy = vec![false; n];
        for &l in labels {
            if l >= n {
                return Err(PropagationError::OutOfRange { vertex: l, n });
            }
            dummy[l] = true;
        }
        let mut dummy_labels: Vec<usize> = labels.to_vec();
        dummy_labels.sort_unstable();
        dummy_labels.dedup();
        Ok(Self {
            base,
            dummy,
            dummy_labels,
            size,
        })
    }

    pub fn base(&self) -> &G {
        &self.base
    }
}

impl<G: MatchingGraph> MatchingGraph for Augmented<G> {
    fn vertex_count(&self) -> usize {
        self.base.vertex_count()
    }

    fn delta(&self) -> f64 {
        self.base.delta()
    }

    fn for_each_incident(&self, v: usize, mut f: impl FnMut(usize, usize)) {
        self.base.for_each_incident(v, |w, l| {
            if !self.dummy[l] {
                f(w, l)
            }
        });
        let n = self.vertex_count();
        for &l in &self.dummy_labels {
            let offset = (v + n - l - 1) % n;
            if offset < 2 * self.size {
                let w = if offset % 2 == 0 { (v + 1) % n } else { (v + n - 1) % n };
                f(w, l);
            }
        }
    }

    fn for_each_labeled(&self, label: usize, mut f: impl FnMut(usize, usize)) {
        if !self.dummy[label] {
            return self.base.for_each_labeled(label, f);
        }
        let n = self.vertex_count();
        for t in 0..self.size {
            let u = (label + 1 + 2 * t) % n;
            let w = (label + 2 + 2 * t) % n;
            f(u.min(w), u.max(w));
        }
    }

    fn matching_len(&self, label: usize) -> usize {
        if self.dummy[label] {
            self.size
        } else {
            self.base.matching_len(label)
        }
    }
}

/// The subgraph induced by an active vertex set: an edge survives when both
/// endpoints and its label are active.
pub struct Restricted<'a, G> {
    base: &'a G,
    active: &'a [bool],
}

impl<'a, G: MatchingGraph> Restricted<'a, G> {
    pub fn new(base: &'a G, active: &'a [bool]) -> Self {
        assert_eq!(active.len(), base.vertex_count(), "mask length must match the graph");
        Self { base, active }
    }

    pub fn active(&self) -> &[bool] {
        self.active
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
}

impl<G: MatchingGraph> MatchingGraph for Restricted<'_, G> {
    fn vertex_count(&self) -> usize {
        self.base.vertex_count()
    }

    fn delta(&self) -> f64 {
        self.base.delta()
    }

    fn for_each_incident(&self, v: usize, mut f: impl FnMut(usize, usize)) {
        if !self.active[v] {
            return;
        }
        self.base.for_each_incident(v, |w, l| {
            if self.active[w] && self.active[l] {
                f(w, l)
            }
        });
    }

    fn for_each_labeled(&self, label: usize, mut f: impl FnMut(usize, usize)) {
        if !self.active[label] {
            return;
        }
        self.base.for_each_labeled(label, |u, w| {
            if self.active[u] && self.active[w] {
                f(u, w)
            }
        });
    }

    fn matching_len(&self, label: usize) -> usize {
        let mut count = 0;
        self.for_each_labeled(label, |_, _| count += 1);
        count
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    /// Checks the matching invariants and that incidence agrees with the labeled lists.
    pub(crate) fn audit<G: MatchingGraph>(g: &G) {
        let n = g.vertex_count();
        let mut from_labels = BTreeSet::new();
        for l in 0..n {
            let mut seen = BTreeSet::new();
            let mut count = 0;
            g.for_each_labeled(l, |u, w| {
                assert!(u < w, "label {l}: edge ({u}, {w}) not normalized");
                assert!(u != l && w != l, "label {l} touches itself");
                assert!(seen.insert(u) && seen.insert(w), "label {l} not a matching");
                from_labels.insert((u, w, l));
                count += 1;
            });
            assert_eq!(count, g.matching_len(l));
        }
        let mut from_incidence = BTreeSet::new();
        for v in 0..n {
            g.for_each_incident(v, |w, l| {
                from_incidence.insert((v.min(w), v.max(w), l));
            });
        }
        assert_eq!(from_labels, from_incidence);
    }

    #[test]
    fn explicit_graph_validation() {
        assert!(LabeledMatchingGraph::new(3, 0.5, vec![vec![(1, 2)], vec![], vec![]]).is_ok());
        assert!(LabeledMatchingGraph::new(3, 0.5, vec![vec![(0, 2)], vec![], vec![]]).is_err());
        assert!(LabeledMatchingGraph::new(4, 0.5, vec![vec![(1, 2), (2, 3)], vec![], vec![], vec![]]).is_err());
        assert!(LabeledMatchingGraph::new(3, 0.5, vec![vec![(1, 1)], vec![], vec![]]).is_err());
        assert!(LabeledMatchingGraph::new(3, 0.5, vec![vec![(1, 5)], vec![], vec![]]).is_err());
        assert!(LabeledMatchingGraph::new(3, 0.5, vec![vec![]; 2]).is_err());
        // parallel edges across labels are fine
        let g = LabeledMatchingGraph::new(4, 0.25, vec![vec![(1, 2)], vec![], vec![], vec![(1, 2)]]).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.degree(1), 2);
        audit(&g);
    }

    #[test]
    fn json_round_trip() {
        let g = LabeledMatchingGraph::new(4, 0.25, vec![vec![(2, 1)], vec![(0, 3)], vec![], vec![]]).unwrap();
        let text = serde_json::to_string(&g.to_json()).unwrap();
        assert_eq!(text, r#"{"n":4,"delta":0.25,"matchings":[[[1,2]],[[0,3]],[],[]]}"#);
        let back = LabeledMatchingGraph::from_json(serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn hadamard_n8_sizes_and_invariants() {
        let g = HadamardMatchings::new(8).unwrap();
        audit(&g);
        for a in 0..8 {
            assert_eq!(g.matching_len(a), 3);
        }
        assert_eq!(g.edge_count(), 24);
        assert!(HadamardMatchings::new(100).is_err());
        // edges of M_a join ξ and a⊕ξ (M_0 joins ξ and ξ⊕1)
        for a in 1..8 {
            g.for_each_labeled(a, |u, w| assert_eq!(u ^ w, a));
        }
        g.for_each_labeled(0, |u, w| assert_eq!(u ^ w, 1));
    }

    #[test]
    fn hadamard_materializes() {
        let g = HadamardMatchings::new(32).unwrap();
        let m = LabeledMatchingGraph::materialize(&g);
        audit(&m);
        assert_eq!(m.edge_count(), g.edge_count());
    }

    #[test]
    fn round_robin_rounds_are_perfect() {
        let g = RoundRobinMatchings::new(6).unwrap();
        for r in 0..5 {
            let mut partners: Vec<usize> = (0..6).map(|v| g.partner(v, r)).collect();
            for v in 0..6 {
                assert_ne!(partners[v], v);
                assert_eq!(g.partner(partners[v], r), v);
            }
            partners.sort_unstable();
            assert_eq!(partners, (0..6).collect::<Vec<_>>());
        }
        audit(&g);
        // without the self-label exclusions every vertex has one edge per label
        for v in 0..6 {
            let excluded = (0..6).filter(|&l| l == v || g.partner(v, g.round(l)) == l).count();
            assert_eq!(g.degree(v) + excluded, 6);
        }
        // rounds together cover every pair of K_6 exactly once
        let mut pairs = BTreeSet::new();
        for r in 0..5 {
            for v in 0..6 {
                let w = g.partner(v, r);
                if v < w {
                    assert!(pairs.insert((v, w)));
                }
            }
        }
        assert_eq!(pairs.len(), 15);
    }

    #[test]
    fn augmented_replaces_labels() {
        let base = HadamardMatchings::new(16).unwrap();
        let aug = Augmented::new(base, &[0, 5], 7).unwrap();
        audit(&aug);
        assert_eq!(aug.matching_len(5), 7);
        let mut edges = Vec::new();
        aug.for_each_labeled(5, |u, w| edges.push((u, w)));
        assert_eq!(edges[0], (6, 7));
        assert_eq!(edges[6], (2, 3));
        assert!(Augmented::new(base, &[1], 8).is_err());
    }

    #[test]
    fn restricted_drops_inactive_edges() {
        let base = HadamardMatchings::new(8).unwrap();
        let mut active = vec![true; 8];
        active[3] = false;
        let r = Restricted::new(&base, &active);
        audit(&r);
        assert_eq!(r.matching_len(3), 0);
        assert_eq!(r.degree(3), 0);
        // M_1 = {2,3},{4,5},{6,7} minus the edge at 3
        assert_eq!(r.matching_len(1), 2);
        assert_eq!(r.active_count(), 7);
    }
}

//! The closure `R(S)`: the least superset of `S` containing every label whose
//! matching has an edge with both endpoints inside.

use super::graph::MatchingGraph;
use super::PropagationError;

/// Incremental closure over a fixed graph.
///
/// Vertices are marked when pushed; an edge fires when its second endpoint
/// is processed, so each edge is inspected at most twice per cascade.
pub struct ClosureState<'g, G> {
    graph: &'g G,
    reached: Vec<bool>,
    count: usize,
    worklist: Vec<u32>,
    order: Vec<u32>,
    trigger: Option<Vec<Option<(u32, u32)>>>,
    scratch: Vec<(usize, usize)>,
}

impl<'g, G: MatchingGraph> ClosureState<'g, G> {
    pub fn new(graph: &'g G) -> Self {
        Self {
            graph,
            reached: vec![false; graph.vertex_count()],
            count: 0,
            worklist: Vec::new(),
            order: Vec::new(),
            trigger: None,
            scratch: Vec::new(),
        }
    }

    /// Also records, for every vertex reached through an edge, the edge that reached it.
    pub fn with_derivation(graph: &'g G) -> Self {
        let mut s = Self::new(graph);
        s.trigger = Some(vec![None; graph.vertex_count()]);
        s
    }

    pub fn graph(&self) -> &'g G {
        self.graph
    }

    pub fn is_reached(&self, v: usize) -> bool {
        self.reached[v]
    }

    pub fn reached_mask(&self) -> &[bool] {
        &self.reached
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn is_full(&self) -> bool {
        self.count == self.reached.len()
    }

    pub fn reached(&self) -> Vec<usize> {
        (0..self.reached.len()).filter(|&v| self.reached[v]).collect()
    }

    /// Vertices in the order they were reached.
    pub fn order(&self) -> impl Iterator<Item = usize> + '_ {
        self.order.iter().map(|&v| v as usize)
    }

    /// The edge `(u, w)` that reached `v`, or `None` for seeded vertices.
    pub fn trigger(&self, v: usize) -> Option<(usize, usize)> {
        self.trigger
            .as_ref()
            .and_then(|t| t[v])
            .map(|(u, w)| (u as usize, w as usize))
    }

    fn check(&self, v: usize) -> Result<(), PropagationError> {
        if v >= self.reached.len() {
            return Err(PropagationError::OutOfRange {
                vertex: v,
                n: self.reached.len(),
            });
        }
        Ok(())
    }

    fn push(&mut self, v: usize, via: Option<(usize, usize)>) {
        self.reached[v] = true;
        self.count += 1;
        self.worklist.push(v as u32);
        self.order.push(v as u32);
        if let Some(t) = self.trigger.as_mut() {
            t[v] = via.map(|(u, w)| (u as u32, w as u32));
        }
    }

    /// Processes the worklist until empty or until `stop_at` vertices have
    /// been reached since `start`. Returns whether it stopped early.
    fn cascade(&mut self, start: usize, stop_at: usize) -> bool {
        let graph = self.graph;
        while let Some(x) = self.worklist.pop() {
            let x = x as usize;
            let mut fresh = std::mem::take(&mut self.scratch);
            let reached = &self.reached;
            graph.for_each_incident(x, |y, label| {
                if reached[y] && !reached[label] {
                    fresh.push((label, y));
                }
            });
            for &(label, y) in &fresh {
                if !self.reached[label] {
                    self.push(label, Some((x.min(y), x.max(y))));
                }
            }
            fresh.clear();
            self.scratch = fresh;
            if self.count - start >= stop_at {
                return true;
            }
        }
        false
    }

    /// Adds the vertices of `s` and propagates. Returns the number of new vertices.
    pub fn extend(&mut self, s: impl IntoIterator<Item = usize>) -> Result<usize, PropagationError> {
        let start = self.count;
        for v in s {
            self.check(v)?;
            if !self.reached[v] {
                self.push(v, None);
            }
        }
        self.cascade(start, usize::MAX);
        Ok(self.count - start)
    }

    fn rollback(&mut self, order_len: usize) {
        for &v in &self.order[order_len..] {
            self.reached[v as usize] = false;
            if let Some(t) = self.trigger.as_mut() {
                t[v as usize] = None;
            }
        }
        self.count -= self.order.len() - order_len;
        self.order.truncate(order_len);
        self.worklist.clear();
    }

    /// Number of vertices adding `v` would reach, capped at `cap`; the state is unchanged.
    pub fn trial_gain(&mut self, v: usize, cap: usize) -> Result<usize, PropagationError> {
        self.check(v)?;
        if self.reached[v] {
            return Ok(0);
        }
        let mark = self.order.len();
        let start = self.count;
        self.push(v, None);
        self.cascade(start, cap.max(1));
        let gain = self.count - start;
        self.rollback(mark);
        Ok(gain.min(cap.max(1)))
    }

    /// Adds `v` if doing so reaches at least `threshold` vertices; otherwise
    /// leaves the state unchanged. Returns the gain when committed.
    pub fn try_add(&mut self, v: usize, threshold: usize) -> Result<Option<usize>, PropagationError> {
        self.check(v)?;
        if self.reached[v] {
            return Ok(None);
        }
        let mark = self.order.len();
        let start = self.count;
        self.push(v, None);
        if self.cascade(start, threshold.max(1)) || self.count - start >= threshold {
            self.cascade(start, usize::MAX);
            return Ok(Some(self.count - start));
        }
        self.rollback(mark);
        Ok(None)
    }
}

/// `R(S)` as a sorted vertex list.
pub fn closure<G: MatchingGraph>(g: &G, s: &[usize]) -> Result<Vec<usize>, PropagationError> {
    let mut state = ClosureState::new(g);
    state.extend(s.iter().copied())?;
    Ok(state.reached())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::graph::{HadamardMatchings, LabeledMatchingGraph};

    /// Repeated full scans until nothing changes.
    fn brute_force(g: &LabeledMatchingGraph, s: &[usize]) -> Vec<usize> {
        let n = g.vertex_count();
        let mut r = vec![false; n];
        for &v in s {
            r[v] = true;
        }
        loop {
            let mut changed = false;
            for l in 0..n {
                if !r[l] && g.matching(l).any(|(u, w)| r[u] && r[w]) {
                    r[l] = true;
                    changed = true;
                }
            }
            if !changed {
                return (0..n).filter(|&v| r[v]).collect();
            }
        }
    }

    fn chain() -> LabeledMatchingGraph {
        let mut m = vec![vec![]; 5];
        m[3] = vec![(1, 2)];
        m[4] = vec![(2, 3)];
        LabeledMatchingGraph::new(5, 0.2, m).unwrap()
    }

    #[test]
    fn chained_rules() {
        let g = chain();
        assert_eq!(closure(&g, &[1, 2]).unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(brute_force(&g, &[1, 2]), vec![1, 2, 3, 4]);
        assert_eq!(closure(&g, &[1, 3]).unwrap(), vec![1, 3]);
    }

    #[test]
    fn trivial_cases() {
        let g = chain();
        assert_eq!(closure(&g, &[0, 1, 2, 3, 4]).unwrap(), vec![0, 1, 2, 3, 4]);
        let empty = LabeledMatchingGraph::new(4, 0.25, vec![vec![]; 4]).unwrap();
        assert_eq!(closure(&empty, &[2, 0]).unwrap(), vec![0, 2]);
        assert!(matches!(closure(&g, &[7]), Err(PropagationError::OutOfRange { vertex: 7, .. })));
    }

    #[test]
    fn hadamard_closure_is_the_span() {
        // closure of basis vectors is their span: nonzero vectors through XOR,
        // and 0 once M_0 has an edge {ξ, ξ⊕1} inside
        let g = HadamardMatchings::new(64).unwrap();
        assert_eq!(closure(&g, &[1, 2]).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(closure(&g, &[2, 4]).unwrap(), vec![2, 4, 6]);
        assert_eq!(closure(&g, &[1, 2, 4]).unwrap(), (0..8).collect::<Vec<_>>());
        assert_eq!(closure(&g, &[1, 2, 4, 8, 16, 32]).unwrap().len(), 64);
    }

    #[test]
    fn derivation_replays() {
        let g = chain();
        let mut s = ClosureState::with_derivation(&g);
        s.extend([1, 2]).unwrap();
        assert_eq!(s.order().collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        assert_eq!(s.trigger(1), None);
        assert_eq!(s.trigger(3), Some((1, 2)));
        assert_eq!(s.trigger(4), Some((2, 3)));
    }

    #[test]
    fn trials_leave_state_unchanged() {
        let g = HadamardMatchings::new(32).unwrap();
        let mut s = ClosureState::with_derivation(&g);
        s.extend([1, 2]).unwrap();
        assert_eq!(s.trial_gain(4, usize::MAX).unwrap(), 4);
        assert_eq!(s.trial_gain(4, 2).unwrap(), 2);
        assert_eq!(s.trial_gain(3, usize::MAX).unwrap(), 0);
        assert_eq!(s.reached(), vec![0, 1, 2, 3]);
        assert_eq!(s.try_add(4, 5).unwrap(), None);
        assert_eq!(s.reached(), vec![0, 1, 2, 3]);
        assert_eq!(s.trigger(5), None);
        assert_eq!(s.try_add(4, 2).unwrap(), Some(4));
        assert_eq!(s.reached(), (0..8).collect::<Vec<_>>());
        let (u, w) = s.trigger(7).unwrap();
        assert_eq!(u ^ w, 7);
    }
}

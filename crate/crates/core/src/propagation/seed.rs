//! Seed sets whose closure covers the whole vertex set.

use serde::Serialize;

use super::cleanup::{cleanup, short_matchings};
use super::closure::ClosureState;
use super::graph::{Augmented, MatchingGraph, Restricted};
use super::PropagationError;

const EPS: f64 = 1e-9;

/// How [`grow_seed`] scores a candidate vertex.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GrowStrategy {
    /// `1 +` the number of edges from the candidate into `R(S)` whose label lies outside `R(S)`.
    #[default]
    DirectGain,
    /// The full closure gain, found by a trial cascade per candidate.
    ExhaustiveClosure,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowResult {
    pub seed: Vec<usize>,
    /// `|R(S)|` inside the subgraph.
    pub reached: usize,
    /// Achieved `c` in `|S| − 1 = c · (|V|/d) · ln|V|`.
    pub constant: f64,
}

/// Greedily adds the vertex with the largest gain until `|R(S)| ≥ d/2`,
/// starting from the lowest active vertex. Ties go to the lowest index.
pub fn grow_seed<G: MatchingGraph>(
    g: &Restricted<'_, G>,
    d: usize,
    strategy: GrowStrategy,
) -> Result<GrowResult, PropagationError> {
    let n = g.vertex_count();
    let active = g.active();
    let size = g.active_count();
    let first = (0..n)
        .find(|&v| active[v])
        .ok_or_else(|| PropagationError::Precondition("grow_seed on an empty vertex set".into()))?;
    if let Some(v) = (0..n).find(|&v| active[v] && g.degree(v) < d) {
        return Err(PropagationError::Precondition(format!(
            "vertex {v} has degree {} < d = {d}",
            g.degree(v)
        )));
    }
    let target = d.div_ceil(2).max(1);
    let mut state = ClosureState::new(g);
    state.extend([first])?;
    let mut seed = vec![first];
    let mut gain = vec![0usize; n];
    while state.len() < target {
        let best = match strategy {
            GrowStrategy::DirectGain => {
                gain.iter_mut().for_each(|x| *x = 0);
                for x in state.reached() {
                    g.for_each_incident(x, |b, label| {
                        if !state.is_reached(b) && !state.is_reached(label) {
                            gain[b] += 1;
                        }
                    });
                }
                (0..n)
                    .filter(|&b| active[b] && !state.is_reached(b))
                    .max_by_key(|&b| (gain[b], std::cmp::Reverse(b)))
            }
            GrowStrategy::ExhaustiveClosure => {
                let mut best: Option<(usize, usize)> = None;
                let candidates: Vec<usize> = (0..n).filter(|&b| active[b] && !state.is_reached(b)).collect();
                for b in candidates {
                    let gain = state.trial_gain(b, usize::MAX)?;
                    if best.is_none_or(|(_, g)| gain > g) {
                        best = Some((b, gain));
                    }
                }
                best.map(|(b, _)| b)
            }
        };
        let b = best.ok_or_else(|| PropagationError::Invariant("grow_seed ran out of vertices".into()))?;
        state.extend([b])?;
        seed.push(b);
    }
    let scale = if d == 0 || size <= 1 {
        0.0
    } else {
        (size as f64 / d as f64) * (size as f64).ln()
    };
    Ok(GrowResult {
        constant: if scale > 0.0 { (seed.len() - 1) as f64 / scale } else { 0.0 },
        seed,
        reached: state.len(),
    })
}

fn check_matching_sizes<G: MatchingGraph>(g: &G, delta: f64) -> Result<(), PropagationError> {
    let n = g.vertex_count();
    let need = (delta * n as f64 - EPS).ceil() as usize;
    if let Some(l) = (0..n).find(|&l| g.matching_len(l) < need) {
        return Err(PropagationError::Precondition(format!(
            "matching {l} has {} edges < δn = {:.3}",
            g.matching_len(l),
            delta * n as f64
        )));
    }
    Ok(())
}

/// Whether `|R(s)| > (1−δ)n`; when it is, reports whether `R(s) = V`.
pub fn check_near_cover<G: MatchingGraph>(g: &G, s: &[usize]) -> Result<bool, PropagationError> {
    let delta = g.delta();
    check_matching_sizes(g, delta)?;
    let mut state = ClosureState::new(g);
    state.extend(s.iter().copied())?;
    let n = g.vertex_count();
    if state.len() as f64 > (1.0 - delta) * n as f64 + EPS {
        return Ok(state.is_full());
    }
    Ok(false)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Init,
    Case1,
    #[serde(rename = "cleanup+grow")]
    CleanupGrow,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedStep {
    pub kind: StepKind,
    pub added: Vec<usize>,
    pub reached_after: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedTrace {
    pub n: usize,
    pub delta: f64,
    /// Seed vertices in the order added.
    pub seed: Vec<usize>,
    pub t1: Vec<usize>,
    /// `|R(S ∪ T1)|` on the input graph.
    pub reached: usize,
    /// `R(S ∪ T1) = V`, verified on the input graph.
    pub covered: bool,
    pub steps: Vec<SeedStep>,
    pub phases_case1: usize,
    pub phases_case2: usize,
    /// `(phases) · δ²`.
    pub phase_constant: f64,
    /// `|S| · δ⁴ / log₂ n`.
    pub seed_constant: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeedOptions {
    pub grow: GrowStrategy,
    /// Abort after this many phases times `1/δ²`.
    pub phase_guard: f64,
}

impl Default for SeedOptions {
    fn default() -> Self {
        Self {
            grow: GrowStrategy::DirectGain,
            phase_guard: 100.0,
        }
    }
}

/// Finds `S` with `R(S ∪ t1) = V`: adds any vertex gaining `0.01δ²n` (lowest
/// index first); when none exists, peels the unreached part and grows a
/// sub-seed inside it.
pub fn find_seed<G: MatchingGraph>(g: &G, t1: &[usize], opts: SeedOptions) -> Result<SeedTrace, PropagationError> {
    let n = g.vertex_count();
    let delta = g.delta();
    if n == 0 {
        return Err(PropagationError::InvalidParams("empty graph".into()));
    }
    let dummy_size = (delta * n as f64 - EPS).ceil() as usize;
    let aug = Augmented::new(g, t1, dummy_size)?;
    check_matching_sizes(&aug, delta)?;

    let mut state = ClosureState::new(&aug);
    let mut seed = Vec::new();
    let mut steps = Vec::new();
    if !t1.is_empty() {
        state.extend(t1.iter().copied())?;
        let mut added = t1.to_vec();
        added.sort_unstable();
        added.dedup();
        steps.push(SeedStep {
            kind: StepKind::Init,
            added,
            reached_after: state.len(),
        });
    }
    let case1_gain = ((0.01 * delta * delta * n as f64 - EPS).ceil() as usize).max(1);
    let guard = opts.phase_guard / (delta * delta);
    let (mut phases_case1, mut phases_case2) = (0usize, 0usize);

    while !state.is_full() {
        if (phases_case1 + phases_case2) as f64 >= guard {
            return Err(PropagationError::Invariant(format!(
                "no cover after {} phases (guard {guard:.0}); |R| = {} of {n}",
                phases_case1 + phases_case2,
                state.len()
            )));
        }
        let mut advanced = false;
        for v in 0..n {
            if state.is_reached(v) {
                continue;
            }
            if state.try_add(v, case1_gain)?.is_some() {
                seed.push(v);
                steps.push(SeedStep {
                    kind: StepKind::Case1,
                    added: vec![v],
                    reached_after: state.len(),
                });
                phases_case1 += 1;
                advanced = true;
                break;
            }
        }
        if advanced {
            continue;
        }

        // No vertex gains enough: the unreached part is large and dense.
        let before = state.len();
        if before as f64 > (1.0 - delta) * n as f64 + EPS {
            return Err(PropagationError::Invariant(format!(
                "|R| = {before} > (1−δ)n but R ≠ V"
            )));
        }
        let rest: Vec<bool> = state.reached_mask().iter().map(|&r| !r).collect();
        let rest_size = n - before;
        let short = short_matchings(&aug, &rest, 0.9 * delta * n as f64);
        if short.len() as f64 > 0.1 * delta * rest_size as f64 + EPS {
            return Err(PropagationError::Invariant(format!(
                "no vertex gains {case1_gain}, yet {} matchings of the unreached part have fewer than 0.9δn edges",
                short.len()
            )));
        }
        let relative = (delta * n as f64 / rest_size as f64).min(1.0);
        let cleaned = cleanup(&aug, &rest, relative)?;
        let mut kept = vec![false; n];
        cleaned.kept.iter().for_each(|&v| kept[v] = true);
        let sub = Restricted::new(&aug, &kept);
        let grown = grow_seed(&sub, cleaned.min_degree, opts.grow)?;
        state.extend(grown.seed.iter().copied())?;
        let gain = state.len() - before;
        if gain < grown.reached {
            return Err(PropagationError::Invariant(format!(
                "sub-seed reached {} inside the subgraph but only {gain} overall",
                grown.reached
            )));
        }
        seed.extend(&grown.seed);
        steps.push(SeedStep {
            kind: StepKind::CleanupGrow,
            added: grown.seed,
            reached_after: state.len(),
        });
        phases_case2 += 1;
    }

    let mut check = ClosureState::new(g);
    check.extend(seed.iter().chain(t1).copied())?;
    let phases = phases_case1 + phases_case2;
    let log_n = (n as f64).log2();
    Ok(SeedTrace {
        n,
        delta,
        t1: {
            let mut t = t1.to_vec();
            t.sort_unstable();
            t.dedup();
            t
        },
        reached: check.len(),
        covered: check.is_full(),
        steps,
        phases_case1,
        phases_case2,
        phase_constant: phases as f64 * delta * delta,
        seed_constant: if log_n > 0.0 {
            seed.len() as f64 * delta.powi(4) / log_n
        } else {
            0.0
        },
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::closure::closure;
    use crate::propagation::graph::{HadamardMatchings, LabeledMatchingGraph, RoundRobinMatchings};

    #[test]
    fn grow_trivial_when_target_is_one() {
        let g = HadamardMatchings::new(16).unwrap();
        let mut active = vec![true; 16];
        active[0] = false;
        let sub = Restricted::new(&g, &active);
        let r = grow_seed(&sub, 2, GrowStrategy::DirectGain).unwrap();
        assert_eq!(r.seed, vec![1]);
    }

    #[test]
    fn grow_rejects_low_degree() {
        let g = HadamardMatchings::new(16).unwrap();
        let active = vec![true; 16];
        let sub = Restricted::new(&g, &active);
        assert!(matches!(
            grow_seed(&sub, 4, GrowStrategy::DirectGain),
            Err(PropagationError::Precondition(_))
        ));
    }

    #[test]
    fn grow_on_hadamard_64_matches_exhaustive() {
        let g = HadamardMatchings::new(64).unwrap();
        let mut active = vec![true; 64];
        active[0] = false;
        let sub = Restricted::new(&g, &active);
        let d = (1..64).map(|v| sub.degree(v)).min().unwrap();
        let fast = grow_seed(&sub, d, GrowStrategy::DirectGain).unwrap();
        let slow = grow_seed(&sub, d, GrowStrategy::ExhaustiveClosure).unwrap();
        assert!(fast.reached >= 16 && fast.seed.len() <= 8);
        assert!(fast.seed.len() <= slow.seed.len() + 1);
        assert_eq!(closure(&sub, &fast.seed).unwrap().len(), fast.reached);
    }

    #[test]
    fn grow_doubles_on_perfect_family() {
        let g = RoundRobinMatchings::new(64).unwrap();
        let active = vec![true; 64];
        let sub = Restricted::new(&g, &active);
        let d = (0..64).map(|v| sub.degree(v)).min().unwrap();
        let r = grow_seed(&sub, d, GrowStrategy::DirectGain).unwrap();
        assert!(r.seed.len() <= (d as f64 / 2.0).log2().ceil() as usize + 1, "{r:?}");
    }

    #[test]
    fn near_cover() {
        let g = HadamardMatchings::new(16).unwrap();
        assert!(check_near_cover(&g, &(0..16).collect::<Vec<_>>()).unwrap());
        assert!(!check_near_cover(&g, &[1, 2]).unwrap());
        let sparse = LabeledMatchingGraph::new(4, 0.5, vec![vec![]; 4]).unwrap();
        assert!(check_near_cover(&sparse, &[0]).is_err());
    }

    #[test]
    fn single_matching_cascade() {
        // M_l = {(0,1)} for every label l ≥ 2, M_0 = {(2,3)}, M_1 = {(2,3)}
        let n = 6;
        let mut m: Vec<Vec<(usize, usize)>> = (0..n).map(|_| vec![(0, 1)]).collect();
        m[0] = vec![(2, 3)];
        m[1] = vec![(2, 3)];
        let g = LabeledMatchingGraph::new(n, 1.0 / 6.0, m).unwrap();
        let trace = find_seed(&g, &[], SeedOptions::default()).unwrap();
        assert!(trace.covered);
        assert_eq!(trace.seed, vec![0, 1]);
        assert_eq!(trace.steps.last().unwrap().reached_after, n);
    }

    #[test]
    fn hadamard_seed_is_logarithmic() {
        for n in [16, 64, 256] {
            let g = HadamardMatchings::new(n).unwrap();
            let trace = find_seed(&g, &[], SeedOptions::default()).unwrap();
            assert!(trace.covered);
            // the basis vectors, plus vertex 0 when the gain threshold is a single vertex
            assert!(trace.seed.len() <= n.trailing_zeros() as usize + 1, "{trace:?}");
            let reached: Vec<usize> = trace.steps.iter().map(|s| s.reached_after).collect();
            assert!(reached.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn t1_is_preseeded() {
        let g = HadamardMatchings::new(32).unwrap();
        let trace = find_seed(&g, &[0, 1, 2], SeedOptions::default()).unwrap();
        assert!(trace.covered);
        assert_eq!(trace.steps[0].kind, StepKind::Init);
        assert_eq!(trace.steps[0].reached_after, 4);
        assert!(!trace.seed.contains(&1));
        let mut all: Vec<usize> = trace.seed.iter().chain(&trace.t1).copied().collect();
        all.sort_unstable();
        assert_eq!(closure(&g, &all).unwrap().len(), 32);
    }
}

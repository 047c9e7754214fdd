//! Instance generators.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::{HadamardMatchings, InstanceJson, LabeledMatchingGraph, MatchingGraph, RoundRobinMatchings};
use super::PropagationError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Hadamard,
    Random,
    Concat,
    Perfect,
}

impl InstanceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            InstanceKind::Hadamard => "hadamard",
            InstanceKind::Random => "random",
            InstanceKind::Concat => "concat",
            InstanceKind::Perfect => "perfect",
        }
    }
}

impl fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InstanceKind {
    type Err = PropagationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hadamard" => Ok(InstanceKind::Hadamard),
            "random" => Ok(InstanceKind::Random),
            "concat" => Ok(InstanceKind::Concat),
            "perfect" => Ok(InstanceKind::Perfect),
            other => Err(PropagationError::InvalidParams(format!("unknown instance kind {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InstanceParams {
    pub n: usize,
    /// Matching fraction for `random` and `concat`; ignored otherwise.
    pub delta: f64,
}

/// A generated or loaded instance.
#[derive(Clone, Debug, PartialEq)]
pub enum Instance {
    Explicit(LabeledMatchingGraph),
    Hadamard(HadamardMatchings),
    Perfect(RoundRobinMatchings),
}

impl Instance {
    pub fn to_json(&self) -> InstanceJson {
        match self {
            Instance::Explicit(g) => g.to_json(),
            Instance::Hadamard(g) => LabeledMatchingGraph::materialize(g).to_json(),
            Instance::Perfect(g) => LabeledMatchingGraph::materialize(g).to_json(),
        }
    }
}

macro_rules! dispatch {
    ($self:ident, $g:ident => $e:expr) => {
        match $self {
            Instance::Explicit($g) => $e,
            Instance::Hadamard($g) => $e,
            Instance::Perfect($g) => $e,
        }
    };
}

impl MatchingGraph for Instance {
    fn vertex_count(&self) -> usize {
        dispatch!(self, g => g.vertex_count())
    }

    fn delta(&self) -> f64 {
        dispatch!(self, g => g.delta())
    }

    fn for_each_incident(&self, v: usize, f: impl FnMut(usize, usize)) {
        dispatch!(self, g => g.for_each_incident(v, f))
    }

    fn for_each_labeled(&self, label: usize, f: impl FnMut(usize, usize)) {
        dispatch!(self, g => g.for_each_labeled(label, f))
    }

    fn matching_len(&self, label: usize) -> usize {
        dispatch!(self, g => g.matching_len(label))
    }

    fn edge_count(&self) -> usize {
        dispatch!(self, g => g.edge_count())
    }

    fn degree(&self, v: usize) -> usize {
        dispatch!(self, g => g.degree(v))
    }
}

/// Matching size `⌈δn⌉` for random instances.
pub fn random_matching_size(n: usize, delta: f64) -> Result<usize, PropagationError> {
    if !(delta.is_finite() && delta > 0.0 && delta <= 1.0) {
        return Err(PropagationError::InvalidParams(format!("delta {delta} outside (0, 1]")));
    }
    let size = (delta * n as f64 - 1e-9).ceil() as usize;
    if (delta * n as f64) < 1.0 - 1e-9 {
        return Err(PropagationError::InvalidParams(format!("delta·n = {} < 1", delta * n as f64)));
    }
    if 2 * size > n.saturating_sub(1) {
        return Err(PropagationError::InvalidParams(format!(
            "a matching of {size} edges avoiding its label does not fit in {n} vertices"
        )));
    }
    Ok(size)
}

/// Each `M_i` pairs up consecutive entries of a random ordering of `[n] ∖ {i}`.
fn random_matchings(n: usize, size: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<(usize, usize)>> {
    (0..n)
        .map(|i| {
            let mut others: Vec<usize> = (0..n).filter(|&v| v != i).collect();
            others.shuffle(rng);
            others.chunks_exact(2).take(size).map(|p| (p[0], p[1])).collect()
        })
        .collect()
}

/// Builds an instance; the same `(kind, params, rng_seed)` always yields the same graph.
pub fn gen_instance(kind: InstanceKind, params: InstanceParams, rng_seed: u64) -> Result<Instance, PropagationError> {
    let n = params.n;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    match kind {
        InstanceKind::Hadamard => Ok(Instance::Hadamard(HadamardMatchings::new(n)?)),
        InstanceKind::Perfect => Ok(Instance::Perfect(RoundRobinMatchings::new(n)?)),
        InstanceKind::Random => {
            let size = random_matching_size(n, params.delta)?;
            let g = LabeledMatchingGraph::new(n, params.delta, random_matchings(n, size, &mut rng))?;
            Ok(Instance::Explicit(g))
        }
        InstanceKind::Concat => {
            if n % 2 != 0 {
                return Err(PropagationError::InvalidParams(format!("concat needs even n, got {n}")));
            }
            let half = n / 2;
            let size = random_matching_size(half, params.delta)?;
            let mut matchings = random_matchings(half, size, &mut rng);
            let second = random_matchings(half, size, &mut rng);
            matchings.extend(
                second
                    .into_iter()
                    .map(|m| m.into_iter().map(|(u, w)| (u + half, w + half)).collect()),
            );
            let g = LabeledMatchingGraph::new(n, params.delta / 2.0, matchings)?;
            Ok(Instance::Explicit(g))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_sizes() {
        let g = gen_instance(InstanceKind::Random, InstanceParams { n: 100, delta: 0.25 }, 1).unwrap();
        assert!((0..100).all(|l| g.matching_len(l) == 25));
        assert!(gen_instance(InstanceKind::Random, InstanceParams { n: 100, delta: 0.005 }, 1).is_err());
        assert!(gen_instance(InstanceKind::Random, InstanceParams { n: 10, delta: 0.5 }, 1).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let p = InstanceParams { n: 40, delta: 0.2 };
        for kind in [InstanceKind::Random, InstanceKind::Concat] {
            let a = gen_instance(kind, p, 9).unwrap();
            assert_eq!(a, gen_instance(kind, p, 9).unwrap());
            assert_ne!(a, gen_instance(kind, p, 10).unwrap());
        }
    }

    #[test]
    fn concat_halves_are_disjoint() {
        let g = gen_instance(InstanceKind::Concat, InstanceParams { n: 40, delta: 0.2 }, 3).unwrap();
        assert_eq!(g.delta(), 0.1);
        for l in 0..40 {
            assert_eq!(g.matching_len(l), 4);
            g.for_each_labeled(l, |u, w| {
                assert_eq!(u < 20, l < 20);
                assert_eq!(w < 20, l < 20);
            });
        }
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("perfect".parse::<InstanceKind>().unwrap(), InstanceKind::Perfect);
        assert!("other".parse::<InstanceKind>().is_err());
        let p = InstanceParams { n: 100, delta: 0.5 };
        assert!(gen_instance(InstanceKind::Hadamard, p, 0).is_err());
        assert!(gen_instance(InstanceKind::Perfect, InstanceParams { n: 7, delta: 0.5 }, 0).is_err());
    }
}

//! Normal form of a zero-error 2-query corrector.
//!
//! Each coordinate's query distribution is either turned into a recovery
//! matching (T2) or, when its support has no large matching, into a smooth
//! one-query corrector (T1) obtained by pinning the vertex cover and the
//! heavily queried positions to the symbol 0.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::code::{CodeParams, EnumerableCode};

/// Exact probability.
pub type Prob = Ratio<u64>;

/// Codes with more codewords than this are validated on a sample.
pub const MAX_ENUMERATED_CODEWORDS: usize = 1 << 20;
const SAMPLED_CODEWORDS: usize = 1 << 16;
const MAX_REPORTED_FAILURES: usize = 16;

/// Success probability a T1 corrector must reach on every codeword.
pub fn t1_success_threshold() -> Prob {
    Ratio::new(2, 3)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NormalFormError {
    #[error("tau must lie in (0, 1], got {0}")]
    InvalidTau(String),
    #[error("query spec has {spec} coordinates but the code has length {code}")]
    LengthMismatch { spec: usize, code: usize },
    #[error("coordinate {coordinate}: {reason}")]
    InvalidDistribution { coordinate: usize, reason: String },
    #[error(
        "zero-error violation at coordinate {coordinate}, pair {pair:?}: codewords {first} and {second} agree on the pair but differ at the coordinate"
    )]
    ZeroErrorViolation {
        coordinate: usize,
        pair: PositionPair,
        first: usize,
        second: usize,
    },
    #[error("code has {0} codewords, too many to enumerate")]
    CodeTooLarge(usize),
}

/// An unordered pair of positions, `lo <= hi`. `lo == hi` is a single query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PositionPair {
    pub lo: usize,
    pub hi: usize,
}

impl PositionPair {
    pub fn new(a: usize, b: usize) -> Self {
        Self {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub fn is_single(&self) -> bool {
        self.lo == self.hi
    }

    pub fn touches(&self, v: usize) -> bool {
        self.lo == v || self.hi == v
    }
}

impl Serialize for PositionPair {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.lo, self.hi].serialize(s)
    }
}

/// How the corrector turns the two answers into an output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResponseRule {
    /// Output `z_lo ⊕ z_hi` (the Hadamard corrector).
    Xor,
    /// Output whatever the code forces; read off by enumerating codewords.
    Enumerated,
}

/// Per-coordinate query distributions of a 2-query corrector.
pub trait QueryDistribution: Sync {
    fn length(&self) -> usize;
    fn rule(&self) -> ResponseRule;
    /// Support of the distribution for coordinate `i`, sorted by pair.
    fn distribution(&self, i: usize) -> Vec<(PositionPair, Prob)>;
}

/// Explicitly listed query distributions.
#[derive(Clone, Debug, PartialEq)]
pub struct QuerySpec {
    n: usize,
    rule: ResponseRule,
    coords: Vec<Vec<(PositionPair, Prob)>>,
}

impl QuerySpec {
    pub fn new(n: usize, rule: ResponseRule, coords: Vec<Vec<(PositionPair, Prob)>>) -> Result<Self, NormalFormError> {
        if coords.len() != n {
            return Err(NormalFormError::LengthMismatch {
                spec: coords.len(),
                code: n,
            });
        }
        let mut merged = Vec::with_capacity(n);
        for (i, dist) in coords.into_iter().enumerate() {
            let mut acc: BTreeMap<PositionPair, Prob> = BTreeMap::new();
            for (pair, w) in dist {
                *acc.entry(PositionPair::new(pair.lo, pair.hi)).or_insert_with(Prob::zero) += w;
            }
            let dist: Vec<_> = acc.into_iter().filter(|(_, w)| !w.is_zero()).collect();
            check_distribution(n, i, &dist)?;
            merged.push(dist);
        }
        Ok(Self {
            n,
            rule,
            coords: merged,
        })
    }
}

impl QueryDistribution for QuerySpec {
    fn length(&self) -> usize {
        self.n
    }

    fn rule(&self) -> ResponseRule {
        self.rule
    }

    fn distribution(&self, i: usize) -> Vec<(PositionPair, Prob)> {
        self.coords[i].clone()
    }
}

fn check_distribution(n: usize, i: usize, dist: &[(PositionPair, Prob)]) -> Result<(), NormalFormError> {
    let mut total = Prob::zero();
    for (pair, w) in dist {
        if pair.hi >= n {
            return Err(NormalFormError::InvalidDistribution {
                coordinate: i,
                reason: format!("pair {pair:?} outside [0, {n})"),
            });
        }
        total += *w;
    }
    if total != Prob::from_integer(1) {
        return Err(NormalFormError::InvalidDistribution {
            coordinate: i,
            reason: format!("weights sum to {total}, not 1"),
        });
    }
    Ok(())
}

/// The natural query distribution of the stacked-Hadamard corrector: ξ
/// uniform in the block, pair {ξ, a⊕ξ}. At a block origin the pair
/// degenerates to the single query {ξ, ξ}.
#[derive(Clone, Copy, Debug)]
pub struct HadamardQuerySpec {
    params: CodeParams,
}

impl HadamardQuerySpec {
    pub fn new(params: CodeParams) -> Self {
        Self { params }
    }
}

impl QueryDistribution for HadamardQuerySpec {
    fn length(&self) -> usize {
        self.params.n()
    }

    fn rule(&self) -> ResponseRule {
        ResponseRule::Xor
    }

    fn distribution(&self, a: usize) -> Vec<(PositionPair, Prob)> {
        let m = self.params.block_len();
        let base = (a / m) * m;
        let local = a % m;
        if local == 0 {
            let w = Ratio::new(1, m as u64);
            return (0..m).map(|xi| (PositionPair::new(base + xi, base + xi), w)).collect();
        }
        let w = Ratio::new(2, m as u64);
        (0..m)
            .filter(|&xi| xi < (local ^ xi))
            .map(|xi| (PositionPair::new(base + xi, base + (local ^ xi)), w))
            .collect()
    }
}

/// Output of the corrector for one query pair, as a function of the two answers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PairRecovery {
    Xor,
    /// Cells keyed by `(z_lo, z_hi)`; cells no codeword reaches are
    /// unconstrained and read as 0.
    Table(BTreeMap<(u32, u32), u32>),
}

impl PairRecovery {
    pub fn apply(&self, z_lo: u32, z_hi: u32) -> u32 {
        match self {
            PairRecovery::Xor => z_lo ^ z_hi,
            PairRecovery::Table(cells) => cells.get(&(z_lo, z_hi)).copied().unwrap_or(0),
        }
    }

    pub fn is_constrained(&self, z_lo: u32, z_hi: u32) -> bool {
        match self {
            PairRecovery::Xor => true,
            PairRecovery::Table(cells) => cells.contains_key(&(z_lo, z_hi)),
        }
    }
}

/// A coordinate recovered through a matching of query pairs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchingEntry {
    #[serde(rename = "i")]
    pub coordinate: usize,
    /// Exactly `⌈τn/4⌉` edges, lexicographically smallest of the greedy matching.
    pub edges: Vec<PositionPair>,
    #[serde(skip)]
    pub recovery: Vec<PairRecovery>,
    /// The full greedy matching before trimming.
    #[serde(skip)]
    pub untrimmed: Vec<PositionPair>,
}

impl MatchingEntry {
    /// Recovers the coordinate from the two endpoint symbols of one of its edges.
    pub fn recover(&self, u: usize, w: usize, z_u: u32, z_w: u32) -> Option<u32> {
        let pair = PositionPair::new(u, w);
        let idx = self.edges.binary_search(&pair).ok()?;
        let (lo, hi) = if u <= w { (z_u, z_w) } else { (z_w, z_u) };
        Some(self.recovery[idx].apply(lo, hi))
    }

    /// Recovery table cells as `(edge, [[z_lo, z_hi, output], ...])`, or `None` for XOR rules.
    pub fn table_json(&self) -> serde_json::Value {
        let edges: Vec<_> = self
            .edges
            .iter()
            .zip(&self.recovery)
            .map(|(e, r)| match r {
                PairRecovery::Xor => serde_json::json!({"edge": e, "rule": "xor"}),
                PairRecovery::Table(cells) => serde_json::json!({
                    "edge": e,
                    "rule": "table",
                    "cells": cells.iter().map(|(&(a, b), &o)| [a, b, o]).collect::<Vec<_>>(),
                }),
            })
            .collect();
        serde_json::json!({"i": self.coordinate, "edges": edges})
    }
}

/// Where a one-query corrector's sampled pair ends up after pinning.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Slot {
    /// Both answers pinned to 0.
    Phi,
    /// The pair's `lo` side (or both sides, for a single query) reads `v`.
    Lo(usize),
    Hi(usize),
    Both(usize),
}

#[derive(Clone, Debug, PartialEq)]
struct Contribution {
    weight: Prob,
    slot: Slot,
    recovery: PairRecovery,
}

impl Contribution {
    fn respond(&self, answer: u32) -> u32 {
        match self.slot {
            Slot::Phi => self.recovery.apply(0, 0),
            Slot::Lo(_) => self.recovery.apply(answer, 0),
            Slot::Hi(_) => self.recovery.apply(0, answer),
            Slot::Both(_) => self.recovery.apply(answer, answer),
        }
    }

    fn position(&self) -> Option<usize> {
        match self.slot {
            Slot::Phi => None,
            Slot::Lo(v) | Slot::Hi(v) | Slot::Both(v) => Some(v),
        }
    }
}

/// A smooth one-query corrector for a T1 coordinate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothOneQueryCorrector {
    #[serde(rename = "i")]
    pub coordinate: usize,
    #[serde(serialize_with = "ser_prob")]
    pub p_phi: Prob,
    /// Nonzero one-query probabilities, sorted by position.
    #[serde(serialize_with = "ser_dist")]
    pub dist: Vec<(usize, Prob)>,
    /// V_i ∪ B_i.
    pub excluded: Vec<usize>,
    #[serde(skip)]
    pub vertex_cover: Vec<usize>,
    #[serde(skip)]
    pub heavy: Vec<usize>,
    #[serde(skip)]
    contributions: Vec<Contribution>,
}

fn ser_prob<S: Serializer>(p: &Prob, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(p.to_f64().unwrap_or(f64::NAN))
}

fn ser_dist<S: Serializer>(d: &[(usize, Prob)], s: S) -> Result<S::Ok, S::Error> {
    let v: Vec<(usize, f64)> = d.iter().map(|(v, p)| (*v, p.to_f64().unwrap_or(f64::NAN))).collect();
    v.serialize(s)
}

impl SmoothOneQueryCorrector {
    /// Builds a corrector directly from one-query pieces. Each piece is
    /// `(position or None for φ, probability, output as a function of the answer)`.
    pub fn from_parts(
        coordinate: usize,
        parts: Vec<(Option<usize>, Prob, PairRecovery)>,
        excluded: Vec<usize>,
    ) -> Self {
        let contributions: Vec<Contribution> = parts
            .into_iter()
            .map(|(v, weight, recovery)| Contribution {
                weight,
                slot: v.map_or(Slot::Phi, Slot::Both),
                recovery,
            })
            .collect();
        Self::assemble(coordinate, contributions, excluded, Vec::new(), Vec::new())
    }

    fn assemble(
        coordinate: usize,
        mut contributions: Vec<Contribution>,
        excluded: Vec<usize>,
        vertex_cover: Vec<usize>,
        heavy: Vec<usize>,
    ) -> Self {
        contributions.sort_by_key(|c| c.position());
        let mut p_phi = Prob::zero();
        let mut dist: BTreeMap<usize, Prob> = BTreeMap::new();
        for c in &contributions {
            match c.position() {
                None => p_phi += c.weight,
                Some(v) => *dist.entry(v).or_insert_with(Prob::zero) += c.weight,
            }
        }
        Self {
            coordinate,
            p_phi,
            dist: dist.into_iter().filter(|(_, p)| !p.is_zero()).collect(),
            excluded,
            vertex_cover,
            heavy,
            contributions,
        }
    }

    /// Probability of querying `v`.
    pub fn probability(&self, v: usize) -> Prob {
        self.dist
            .binary_search_by_key(&v, |&(u, _)| u)
            .map(|i| self.dist[i].1)
            .unwrap_or_else(|_| Prob::zero())
    }

    fn contributions_at(&self, v: Option<usize>) -> &[Contribution] {
        let start = self.contributions.partition_point(|c| c.position() < v);
        let end = self.contributions.partition_point(|c| c.position() <= v);
        &self.contributions[start..end]
    }

    /// `p_v · Pr[R_v(s) = σ]` for every output σ (`p_φ · Pr[R_φ = σ]` when `v` is `None`).
    pub fn response_mass(&self, v: Option<usize>, s: u32) -> Vec<(u32, Prob)> {
        let mut out: BTreeMap<u32, Prob> = BTreeMap::new();
        for c in self.contributions_at(v) {
            *out.entry(c.respond(s)).or_insert_with(Prob::zero) += c.weight;
        }
        out.into_iter().collect()
    }

    /// Output distribution of R_v on answer `s`, or of R_φ when `v` is `None`.
    pub fn response_distribution(&self, v: Option<usize>, s: u32) -> Vec<(u32, Prob)> {
        let mass = self.response_mass(v, s);
        let total = mass.iter().fold(Prob::zero(), |acc, (_, w)| acc + *w);
        if total.is_zero() {
            return Vec::new();
        }
        mass.into_iter().map(|(sym, w)| (sym, w / total)).collect()
    }

    /// `Pr_{v∼D}[R_v(c_v) = c_i]` for the word `c`.
    pub fn success_probability(&self, c: &[u32]) -> Prob {
        let target = c[self.coordinate];
        self.contributions
            .iter()
            .filter(|con| con.respond(con.position().map_or(0, |v| c[v])) == target)
            .fold(Prob::zero(), |acc, con| acc + con.weight)
    }
}

/// The T1/T2 normal form of a corrector.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalForm {
    pub n: usize,
    pub tau: Prob,
    pub t1: BTreeMap<usize, SmoothOneQueryCorrector>,
    pub t2: BTreeMap<usize, MatchingEntry>,
    /// τn < 4: the smoothness cap 4/(τn) exceeds 1 and constrains nothing.
    pub smoothness_vacuous: bool,
}

#[derive(Serialize)]
struct NormalFormJson<'a> {
    n: usize,
    tau: f64,
    t1: Vec<&'a SmoothOneQueryCorrector>,
    t2: Vec<&'a MatchingEntry>,
}

impl Serialize for NormalForm {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        NormalFormJson {
            n: self.n,
            tau: self.tau.to_f64().unwrap_or(f64::NAN),
            t1: self.t1.values().collect(),
            t2: self.t2.values().collect(),
        }
        .serialize(s)
    }
}

impl NormalForm {
    /// `⌈τn/4⌉`, the size every recovery matching is trimmed to.
    pub fn matching_size(&self) -> usize {
        required_matching(self.tau, self.n)
    }

    pub fn t1_coordinates(&self) -> Vec<usize> {
        self.t1.keys().copied().collect()
    }

    pub fn t2_coordinates(&self) -> Vec<usize> {
        self.t2.keys().copied().collect()
    }

    pub fn is_partition(&self) -> bool {
        self.t1.keys().all(|i| !self.t2.contains_key(i))
            && self.t1.len() + self.t2.len() == self.n
            && self.t1.keys().chain(self.t2.keys()).all(|&i| i < self.n)
    }
}

fn required_matching(tau: Prob, n: usize) -> usize {
    let eps_n = tau * Prob::from_integer(n as u64) / Prob::from_integer(4);
    eps_n.ceil().to_integer() as usize
}

/// Greedy maximal matching over `edges` (already sorted), skipping self-loops
/// and edges touching `avoid`.
pub fn greedy_matching(n: usize, edges: &[PositionPair], avoid: Option<usize>) -> Vec<PositionPair> {
    let mut used = vec![false; n];
    let mut matching = Vec::new();
    for e in edges {
        if e.is_single() || avoid.is_some_and(|v| e.touches(v)) {
            continue;
        }
        if !used[e.lo] && !used[e.hi] {
            used[e.lo] = true;
            used[e.hi] = true;
            matching.push(*e);
        }
    }
    matching
}

/// Tables for every support pair of coordinate `i`, read off the code.
fn enumerate_tables(
    words: &[Vec<u32>],
    i: usize,
    pairs: &[PositionPair],
) -> Result<Vec<PairRecovery>, NormalFormError> {
    pairs
        .iter()
        .map(|pair| {
            let mut cells: BTreeMap<(u32, u32), (u32, usize)> = BTreeMap::new();
            for (idx, c) in words.iter().enumerate() {
                let key = (c[pair.lo], c[pair.hi]);
                match cells.get(&key) {
                    Some(&(out, first)) if out != c[i] => {
                        return Err(NormalFormError::ZeroErrorViolation {
                            coordinate: i,
                            pair: *pair,
                            first,
                            second: idx,
                        })
                    }
                    Some(_) => {}
                    None => {
                        cells.insert(key, (c[i], idx));
                    }
                }
            }
            Ok(PairRecovery::Table(cells.into_iter().map(|(k, (o, _))| (k, o)).collect()))
        })
        .collect()
}

fn load_code(code: &dyn EnumerableCode) -> Result<Vec<Vec<u32>>, NormalFormError> {
    if code.size() > MAX_ENUMERATED_CODEWORDS {
        return Err(NormalFormError::CodeTooLarge(code.size()));
    }
    Ok((0..code.size()).map(|i| code.codeword(i)).collect())
}

/// Splits the coordinates into recovery matchings (T2) and smooth one-query
/// correctors (T1).
pub fn extract_normal_form(
    spec: &dyn QueryDistribution,
    code: &dyn EnumerableCode,
    tau: Prob,
) -> Result<NormalForm, NormalFormError> {
    let n = spec.length();
    if tau.is_zero() || tau > Prob::from_integer(1) {
        return Err(NormalFormError::InvalidTau(tau.to_string()));
    }
    if code.length() != n {
        return Err(NormalFormError::LengthMismatch {
            spec: n,
            code: code.length(),
        });
    }
    let rule = spec.rule();
    let words = match rule {
        ResponseRule::Enumerated => load_code(code)?,
        ResponseRule::Xor => Vec::new(),
    };
    let recoveries = |i: usize, pairs: &[PositionPair]| -> Result<Vec<PairRecovery>, NormalFormError> {
        match rule {
            ResponseRule::Xor => Ok(vec![PairRecovery::Xor; pairs.len()]),
            ResponseRule::Enumerated => enumerate_tables(&words, i, pairs),
        }
    };

    let tau_n = tau * Prob::from_integer(n as u64);
    let need = required_matching(tau, n);
    // Pr[query j] ≥ 1/(εn) = 4/(τn) marks j as heavy.
    let heavy_cut = Prob::from_integer(4) / tau_n;

    let mut t1 = BTreeMap::new();
    let mut t2 = BTreeMap::new();
    for i in 0..n {
        let dist = spec.distribution(i);
        check_distribution(n, i, &dist)?;
        let pairs: Vec<PositionPair> = dist.iter().map(|(p, _)| *p).collect();
        let tables = recoveries(i, &pairs)?;
        let matching = greedy_matching(n, &pairs, Some(i));

        if matching.len() >= need {
            let edges: Vec<PositionPair> = matching[..need].to_vec();
            let recovery = edges
                .iter()
                .map(|e| tables[pairs.binary_search(e).expect("edge comes from the support")].clone())
                .collect();
            t2.insert(
                i,
                MatchingEntry {
                    coordinate: i,
                    edges,
                    recovery,
                    untrimmed: matching,
                },
            );
            continue;
        }

        let mut cover: BTreeSet<usize> = matching.iter().flat_map(|e| [e.lo, e.hi]).collect();
        if pairs
            .iter()
            .any(|e| !e.is_single() && !cover.contains(&e.lo) && !cover.contains(&e.hi))
        {
            // Only edges touching i can escape the matching's endpoints.
            cover.insert(i);
        }
        let mut marginal: BTreeMap<usize, Prob> = BTreeMap::new();
        for (pair, w) in &dist {
            *marginal.entry(pair.lo).or_insert_with(Prob::zero) += *w;
            if !pair.is_single() {
                *marginal.entry(pair.hi).or_insert_with(Prob::zero) += *w;
            }
        }
        let heavy: Vec<usize> = marginal
            .iter()
            .filter(|(_, &p)| p >= heavy_cut)
            .map(|(&j, _)| j)
            .collect();
        let excluded: BTreeSet<usize> = cover.iter().chain(&heavy).copied().collect();

        let contributions = dist
            .iter()
            .zip(tables)
            .map(|((pair, w), recovery)| {
                let lo_free = !excluded.contains(&pair.lo);
                let hi_free = !excluded.contains(&pair.hi);
                let slot = match (pair.is_single(), lo_free, hi_free) {
                    (true, true, _) => Slot::Both(pair.lo),
                    (false, true, false) => Slot::Lo(pair.lo),
                    (false, false, true) => Slot::Hi(pair.hi),
                    (false, true, true) => unreachable!("vertex cover leaves pair {pair:?} unpinned"),
                    _ => Slot::Phi,
                };
                Contribution {
                    weight: *w,
                    slot,
                    recovery,
                }
            })
            .collect();
        t1.insert(
            i,
            SmoothOneQueryCorrector::assemble(
                i,
                contributions,
                excluded.into_iter().collect(),
                cover.into_iter().collect(),
                heavy,
            ),
        );
    }
    Ok(NormalForm {
        n,
        tau,
        t1,
        t2,
        smoothness_vacuous: tau_n < Prob::from_integer(4),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EdgeFailure {
    pub coordinate: usize,
    pub edge: PositionPair,
    pub codeword: usize,
    pub expected: u32,
    pub got: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct T1Failure {
    pub coordinate: usize,
    pub codeword: usize,
    pub success: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    /// The code was too large to enumerate and a sample was checked.
    pub sampled: bool,
    pub codewords_checked: usize,
    pub edge_failures: Vec<EdgeFailure>,
    pub t1_failures: Vec<T1Failure>,
    pub min_t1_success: Option<f64>,
}

/// Checks every recovery edge and every T1 corrector against the code.
pub fn validate_zero_error(nf: &NormalForm, code: &dyn EnumerableCode) -> ValidationReport {
    let sampled = code.size() > MAX_ENUMERATED_CODEWORDS;
    let indices: Vec<usize> = if sampled {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        (0..SAMPLED_CODEWORDS).map(|_| rng.gen_range(0..code.size())).collect()
    } else {
        (0..code.size()).collect()
    };
    let threshold = t1_success_threshold();
    let mut edge_failures = Vec::new();
    let mut t1_failures = Vec::new();
    let mut edge_failure_count = 0usize;
    let mut t1_failure_count = 0usize;
    let mut min_t1: Option<Prob> = None;
    for &idx in &indices {
        let c = code.codeword(idx);
        for entry in nf.t2.values() {
            for (edge, rec) in entry.edges.iter().zip(&entry.recovery) {
                let got = rec.apply(c[edge.lo], c[edge.hi]);
                if got != c[entry.coordinate] {
                    edge_failure_count += 1;
                    if edge_failures.len() < MAX_REPORTED_FAILURES {
                        edge_failures.push(EdgeFailure {
                            coordinate: entry.coordinate,
                            edge: *edge,
                            codeword: idx,
                            expected: c[entry.coordinate],
                            got,
                        });
                    }
                }
            }
        }
        for corr in nf.t1.values() {
            let p = corr.success_probability(&c);
            if min_t1.is_none_or(|m| p < m) {
                min_t1 = Some(p);
            }
            if p < threshold {
                t1_failure_count += 1;
                if t1_failures.len() < MAX_REPORTED_FAILURES {
                    t1_failures.push(T1Failure {
                        coordinate: corr.coordinate,
                        codeword: idx,
                        success: p.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
        }
    }
    ValidationReport {
        passed: edge_failure_count == 0 && t1_failure_count == 0,
        sampled,
        codewords_checked: indices.len(),
        edge_failures,
        t1_failures,
        min_t1_success: min_t1.map(|p| p.to_f64().unwrap_or(f64::NAN)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothnessMargin {
    /// `max p_v · τn/4` over T1 coordinates; smooth iff ≤ 1.
    #[serde(serialize_with = "ser_prob")]
    pub value: Prob,
    /// The (coordinate, position) attaining the maximum.
    pub at: Option<(usize, usize)>,
}

impl SmoothnessMargin {
    pub fn is_smooth(&self) -> bool {
        self.value <= Prob::from_integer(1)
    }
}

pub fn smoothness_margin(nf: &NormalForm) -> SmoothnessMargin {
    let scale = nf.tau * Prob::from_integer(nf.n as u64) / Prob::from_integer(4);
    let mut best = SmoothnessMargin {
        value: Prob::zero(),
        at: None,
    };
    for corr in nf.t1.values() {
        for &(v, p) in &corr.dist {
            let m = p * scale;
            if best.at.is_none() || m > best.value {
                best = SmoothnessMargin {
                    value: m,
                    at: Some((corr.coordinate, v)),
                };
            }
        }
    }
    best
}

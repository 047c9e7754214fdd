//! From a locally correctable code to a locally decodable one: code distance,
//! concatenation with a binary inner code, shattered-set search, and the
//! resulting decoder.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::code::{local_correct, CodeError, EnumerableCode, QueryPair, StackedHadamardCode};

/// Codes larger than this are not scanned pairwise.
pub const MAX_DISTANCE_CODEWORDS: usize = 1 << 14;
/// Largest index set the shattered-set search examines.
pub const MAX_VC_DIM: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LdcError {
    #[error("code has {0} codewords; pairwise scan is limited to 2^14")]
    CodeTooLarge(usize),
    #[error("inner code takes {inner} bits but the outer alphabet has {outer}")]
    WidthMismatch { inner: u32, outer: u32 },
    #[error("invalid inner code: {0}")]
    InvalidInner(String),
    #[error("index set is not shattered: pattern {pattern:#b} has no codeword")]
    NotShattered { pattern: u64 },
    #[error("index {0} is not a decodable position")]
    NotInIndexSet(usize),
    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),
    #[error(transparent)]
    Code(#[from] CodeError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceReport {
    /// Minimum pairwise distance divided by the length.
    pub fraction: f64,
    pub min_distance: usize,
    pub length: usize,
    /// Two codewords coincide.
    pub duplicate: bool,
    pub warning: Option<String>,
}

/// Exact minimum pairwise Hamming distance by scanning all pairs.
pub fn min_distance(code: &dyn EnumerableCode) -> Result<DistanceReport, LdcError> {
    let size = code.size();
    if size > MAX_DISTANCE_CODEWORDS {
        return Err(LdcError::CodeTooLarge(size));
    }
    let length = code.length();
    if size < 2 {
        return Ok(DistanceReport {
            fraction: 1.0,
            min_distance: length,
            length,
            duplicate: false,
            warning: Some(format!("code has {size} codeword(s); distance defined as 1")),
        });
    }
    let words: Vec<Vec<u32>> = (0..size).map(|i| code.codeword(i)).collect();
    let mut best = usize::MAX;
    for (i, a) in words.iter().enumerate() {
        for b in &words[i + 1..] {
            let d = a.iter().zip(b).filter(|(x, y)| x != y).count();
            best = best.min(d);
        }
        if best == 0 {
            break;
        }
    }
    Ok(DistanceReport {
        fraction: if length == 0 { 0.0 } else { best as f64 / length as f64 },
        min_distance: best,
        length,
        duplicate: best == 0,
        warning: (best == 0).then(|| "duplicate codewords".to_string()),
    })
}

/// A binary code on `s`-bit inputs, stored as its encoding table.
#[derive(Clone, Debug, PartialEq)]
pub struct InnerCode {
    name: String,
    s: u32,
    t: usize,
    table: Vec<Vec<bool>>,
    delta0: f64,
}

impl Serialize for InnerCode {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct View<'a> {
            name: &'a str,
            s: u32,
            t: usize,
            delta0: f64,
        }
        View {
            name: &self.name,
            s: self.s,
            t: self.t,
            delta0: self.delta0,
        }
        .serialize(ser)
    }
}

impl InnerCode {
    /// Checks injectivity and measures the distance of an explicit table.
    pub fn from_table(name: &str, s: u32, table: Vec<Vec<bool>>) -> Result<Self, LdcError> {
        if s == 0 || s > 16 {
            return Err(LdcError::InvalidInner(format!("input width {s} outside 1..=16")));
        }
        if table.len() != 1usize << s {
            return Err(LdcError::InvalidInner(format!("{} entries for {s}-bit inputs", table.len())));
        }
        let t = table[0].len();
        if t == 0 || table.iter().any(|w| w.len() != t) {
            return Err(LdcError::InvalidInner("entries must share a nonzero length".into()));
        }
        let mut min = t;
        for (i, a) in table.iter().enumerate() {
            for b in &table[i + 1..] {
                min = min.min(a.iter().zip(b).filter(|(x, y)| x != y).count());
            }
        }
        if min == 0 {
            return Err(LdcError::InvalidInner("encoding is not injective".into()));
        }
        Ok(Self {
            name: name.to_string(),
            s,
            t,
            table,
            delta0: min as f64 / t as f64,
        })
    }

    /// Hadamard code on `s` bits: length `2^s`, distance 1/2.
    pub fn hadamard(s: u32) -> Result<Self, LdcError> {
        let t = 1usize << s;
        let table = (0..1u32 << s)
            .map(|x| (0..t).map(|xi| (x & xi as u32).count_ones() % 2 == 1).collect())
            .collect();
        Self::from_table("hadamard", s, table)
    }

    /// The bits of the symbol, least significant first.
    pub fn identity(s: u32) -> Result<Self, LdcError> {
        let table = (0..1u32 << s).map(|x| (0..s).map(|i| x >> i & 1 == 1).collect()).collect();
        Self::from_table("identity", s, table)
    }

    pub fn input_bits(&self) -> u32 {
        self.s
    }

    pub fn length(&self) -> usize {
        self.t
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    pub fn encode(&self, symbol: u32) -> &[bool] {
        &self.table[symbol as usize]
    }
}

/// Blockwise inner encoding of every outer codeword.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcatenatedCode {
    outer_length: usize,
    t: usize,
    words: Vec<Vec<bool>>,
    /// Index of the outer codeword each word came from.
    pub outer_index: Vec<usize>,
}

impl ConcatenatedCode {
    pub fn words(&self) -> &[Vec<bool>] {
        &self.words
    }

    pub fn outer_length(&self) -> usize {
        self.outer_length
    }

    pub fn block_len(&self) -> usize {
        self.t
    }
}

impl EnumerableCode for ConcatenatedCode {
    fn size(&self) -> usize {
        self.words.len()
    }

    fn length(&self) -> usize {
        self.outer_length * self.t
    }

    fn symbol_bits(&self) -> u32 {
        1
    }

    fn codeword(&self, index: usize) -> Vec<u32> {
        self.words[index].iter().map(|&b| b as u32).collect()
    }
}

fn inner_encode_word(inner: &InnerCode, word: &[u32]) -> Vec<bool> {
    word.iter().flat_map(|&s| inner.encode(s).iter().copied()).collect()
}

pub fn concatenate(outer: &dyn EnumerableCode, inner: &InnerCode) -> Result<ConcatenatedCode, LdcError> {
    if outer.symbol_bits() != inner.s {
        return Err(LdcError::WidthMismatch {
            inner: inner.s,
            outer: outer.symbol_bits(),
        });
    }
    let words = (0..outer.size()).map(|i| inner_encode_word(inner, &outer.codeword(i))).collect();
    Ok(ConcatenatedCode {
        outer_length: outer.length(),
        t: inner.t,
        words,
        outer_index: (0..outer.size()).collect(),
    })
}

/// A shattered index set together with a witness for every pattern.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VcResult {
    /// Sorted positions; bit `q` of a pattern is the value at `indices[q]`.
    pub indices: Vec<usize>,
    /// Pattern → index of the smallest codeword realizing it.
    pub certificate: BTreeMap<u64, usize>,
    /// The search stopped at `max_dim` below `⌊log₂|C|⌋`, so a larger set may exist.
    pub capped: bool,
    /// `⌊log₂|C|⌋`, the largest possible answer.
    pub upper_bound: usize,
}

impl VcResult {
    /// Confirms that every one of the `2^|I|` patterns has a witness realizing it.
    pub fn verify(&self, words: &[Vec<bool>]) -> bool {
        let dim = self.indices.len();
        self.certificate.len() == 1usize << dim
            && self.certificate.iter().all(|(&p, &c)| pattern_of(&words[c], &self.indices) == p)
    }
}

fn pattern_of(word: &[bool], indices: &[usize]) -> u64 {
    indices
        .iter()
        .enumerate()
        .fold(0u64, |acc, (q, &i)| acc | ((word[i] as u64) << q))
}

/// Largest shattered set of size at most `max_dim`, lexicographically
/// smallest among the largest. Extends shattered sets by increasing index;
/// only non-constant positions are candidates.
pub fn brute_force_vc(words: &[Vec<bool>], max_dim: usize) -> VcResult {
    let max_dim = max_dim.min(MAX_VC_DIM);
    let size = words.len();
    let upper_bound = if size == 0 { 0 } else { size.ilog2() as usize };
    let length = words.first().map_or(0, Vec::len);
    let candidates: Vec<usize> = (0..length)
        .filter(|&i| words.iter().any(|w| w[i]) && words.iter().any(|w| !w[i]))
        .collect();
    let goal = upper_bound.min(max_dim);

    let mut best: Vec<usize> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    let mut patterns = vec![0u64; size];
    search(words, &candidates, 0, goal, &mut current, &mut patterns, &mut best);

    let mut certificate = BTreeMap::new();
    for (c, w) in words.iter().enumerate() {
        certificate.entry(pattern_of(w, &best)).or_insert(c);
    }
    VcResult {
        capped: best.len() == max_dim && max_dim < upper_bound,
        indices: best,
        certificate,
        upper_bound,
    }
}

/// Returns true once a set of size `goal` is found.
fn search(
    words: &[Vec<bool>],
    candidates: &[usize],
    from: usize,
    goal: usize,
    current: &mut Vec<usize>,
    patterns: &mut [u64],
    best: &mut Vec<usize>,
) -> bool {
    if current.len() > best.len() {
        *best = current.clone();
    }
    if current.len() >= goal {
        return true;
    }
    let dim = current.len();
    let mut seen = vec![false; 1usize << (dim + 1)];
    for (pos, &i) in candidates.iter().enumerate().skip(from) {
        seen.iter_mut().for_each(|s| *s = false);
        let mut hits = 0usize;
        for (c, w) in words.iter().enumerate() {
            let p = patterns[c] | ((w[i] as u64) << dim);
            if !seen[p as usize] {
                seen[p as usize] = true;
                hits += 1;
            }
        }
        if hits != seen.len() {
            continue;
        }
        for (c, w) in words.iter().enumerate() {
            patterns[c] |= (w[i] as u64) << dim;
        }
        current.push(i);
        let done = search(words, candidates, pos + 1, goal, current, patterns, best);
        current.pop();
        for p in patterns.iter_mut() {
            *p &= !(1u64 << dim);
        }
        if done {
            return true;
        }
    }
    false
}

/// An LDC built from a stacked-Hadamard outer code and a binary inner code.
#[derive(Clone, Debug, PartialEq)]
pub struct LdcConstruction {
    outer: StackedHadamardCode,
    inner: InnerCode,
    /// The shattered set I inside the concatenated word.
    pub indices: Vec<usize>,
    /// Outer block holding each position of I.
    pub block_of: Vec<usize>,
    /// Offset of each position of I inside its block.
    pub offsets: Vec<usize>,
    /// Outer codeword index chosen for each message pattern.
    pub representatives: Vec<usize>,
}

impl Serialize for LdcConstruction {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct View<'a> {
            #[serde(rename = "I")]
            indices: &'a [usize],
            block_of: &'a [usize],
            inner: &'a InnerCode,
            representatives: &'a [usize],
        }
        View {
            indices: &self.indices,
            block_of: &self.block_of,
            inner: &self.inner,
            representatives: &self.representatives,
        }
        .serialize(ser)
    }
}

/// Picks, for every pattern on `indices`, the lexicographically smallest outer
/// codeword whose concatenated encoding realizes it.
pub fn build_ldc(outer: &StackedHadamardCode, inner: &InnerCode, indices: &[usize]) -> Result<LdcConstruction, LdcError> {
    let params = outer.params();
    if params.symbol_bits() != inner.s {
        return Err(LdcError::WidthMismatch {
            inner: inner.s,
            outer: params.symbol_bits(),
        });
    }
    let total = params.n() * inner.t;
    if indices.len() > MAX_VC_DIM || indices.windows(2).any(|w| w[0] >= w[1]) || indices.iter().any(|&i| i >= total) {
        return Err(LdcError::InvalidIndexSet(format!("{indices:?} must be strictly increasing in [0, {total})")));
    }
    let mut best: Vec<Option<(Vec<u32>, usize)>> = vec![None; 1usize << indices.len()];
    for idx in 0..outer.size() {
        let word = outer.codeword(idx);
        let p = pattern_of(&inner_encode_word(inner, &word), indices) as usize;
        if best[p].as_ref().is_none_or(|(w, _)| word < *w) {
            best[p] = Some((word, idx));
        }
    }
    let mut representatives = Vec::with_capacity(best.len());
    for (p, entry) in best.into_iter().enumerate() {
        match entry {
            Some((_, idx)) => representatives.push(idx),
            None => return Err(LdcError::NotShattered { pattern: p as u64 }),
        }
    }
    Ok(LdcConstruction {
        outer: *outer,
        inner: inner.clone(),
        block_of: indices.iter().map(|&i| i / inner.t).collect(),
        offsets: indices.iter().map(|&i| i % inner.t).collect(),
        indices: indices.to_vec(),
        representatives,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LdcDecode {
    pub bit: bool,
    pub queries: QueryPair,
}

impl LdcConstruction {
    pub fn message_bits(&self) -> usize {
        self.indices.len()
    }

    pub fn outer(&self) -> &StackedHadamardCode {
        &self.outer
    }

    pub fn inner(&self) -> &InnerCode {
        &self.inner
    }

    /// The outer codeword encoding message `x` (bit `q` of `x` is message bit `q`).
    pub fn encode(&self, x: u64) -> Vec<u32> {
        self.outer.codeword(self.representatives[x as usize])
    }

    /// Reads `i`'s bit of the concatenated encoding of an outer word.
    pub fn read_concatenated(&self, word: &[u32], i: usize) -> bool {
        self.inner.encode(word[i / self.inner.t])[i % self.inner.t]
    }

    /// Decodes the message bit at position `i ∈ I` from a received outer word
    /// by correcting block `j` with two queries and re-encoding it.
    pub fn decode<R: Rng + ?Sized>(&self, received: &[u32], i: usize, rng: &mut R) -> Result<LdcDecode, LdcError> {
        let q = self
            .indices
            .binary_search(&i)
            .map_err(|_| LdcError::NotInIndexSet(i))?;
        let corrected = local_correct(self.outer.params(), received, self.block_of[q], rng)?;
        let queries = corrected
            .queries
            .expect("shattered positions never lie in a constant block");
        Ok(LdcDecode {
            bit: self.inner.encode(corrected.symbol)[self.offsets[q]],
            queries,
        })
    }
}

pub fn ldc_decode<R: Rng + ?Sized>(
    ldc: &LdcConstruction,
    received: &[u32],
    i: usize,
    rng: &mut R,
) -> Result<LdcDecode, LdcError> {
    ldc.decode(received, i, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{CodeParams, CodeTable};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn binary_hadamard(r: usize) -> StackedHadamardCode {
        StackedHadamardCode::new(CodeParams::new(r, 1, 1.0 / 6.0).unwrap())
    }

    #[test]
    fn hadamard_distance_is_half() {
        let d = min_distance(&binary_hadamard(3)).unwrap();
        assert_eq!(d.min_distance, 4);
        assert_eq!(d.fraction, 0.5);
        let stacked = StackedHadamardCode::new(CodeParams::new(8, 2, 1.0 / 6.0).unwrap());
        assert_eq!(min_distance(&stacked).unwrap().fraction, 0.5);
    }

    #[test]
    fn degenerate_distances() {
        let dup = CodeTable::new(3, 1, vec![vec![0, 1, 0], vec![0, 1, 0]]).unwrap();
        let d = min_distance(&dup).unwrap();
        assert!(d.duplicate);
        assert_eq!(d.fraction, 0.0);
        let single = CodeTable::new(3, 1, vec![vec![0, 1, 0]]).unwrap();
        let d = min_distance(&single).unwrap();
        assert_eq!(d.fraction, 1.0);
        assert!(d.warning.is_some());
    }

    #[test]
    fn inner_codes() {
        let h = InnerCode::hadamard(2).unwrap();
        assert_eq!(h.length(), 4);
        assert_eq!(h.delta0(), 0.5);
        assert_eq!(h.encode(3), &[false, true, true, false]);
        let id = InnerCode::identity(2).unwrap();
        assert_eq!(id.encode(2), &[false, true]);
        assert_eq!(id.delta0(), 0.5);
        assert!(InnerCode::from_table("bad", 1, vec![vec![true], vec![true]]).is_err());
    }

    #[test]
    fn identity_concatenation_is_binary_expansion() {
        let outer = StackedHadamardCode::new(CodeParams::new(4, 2, 1.0 / 6.0).unwrap());
        let c1 = concatenate(&outer, &InnerCode::identity(2).unwrap()).unwrap();
        assert_eq!(c1.size(), outer.size());
        for i in 0..outer.size() {
            let expanded: Vec<bool> = outer.codeword(i).iter().flat_map(|&s| [s & 1 == 1, s & 2 == 2]).collect();
            assert_eq!(c1.words()[i], expanded);
        }
        assert!(concatenate(&outer, &InnerCode::hadamard(3).unwrap()).is_err());
    }

    #[test]
    fn concatenated_distance_quarter() {
        let outer = StackedHadamardCode::new(CodeParams::new(8, 2, 1.0 / 6.0).unwrap());
        let c1 = concatenate(&outer, &InnerCode::hadamard(2).unwrap()).unwrap();
        assert_eq!(min_distance(&c1).unwrap().fraction, 0.25);
    }

    #[test]
    fn vc_of_binary_hadamard() {
        let words: Vec<Vec<bool>> = (0..8)
            .map(|i| binary_hadamard(3).codeword(i).iter().map(|&s| s == 1).collect())
            .collect();
        let vc = brute_force_vc(&words, 20);
        assert_eq!(vc.indices, vec![1, 2, 4]);
        assert!(vc.verify(&words));
        assert!(!vc.capped);
        // the standard basis positions 1, 2, 4 read off (y1, y2, y3)
        for (i, w) in words.iter().enumerate() {
            assert_eq!(pattern_of(w, &[1, 2, 4]), i as u64);
        }
    }

    #[test]
    fn vc_of_two_codewords() {
        let words = vec![vec![false, true, false], vec![false, false, false]];
        let vc = brute_force_vc(&words, 20);
        assert_eq!(vc.indices, vec![1]);
        assert!(vc.verify(&words));
    }

    #[test]
    fn vc_cap_is_flagged() {
        let words: Vec<Vec<bool>> = (0..8)
            .map(|i| binary_hadamard(3).codeword(i).iter().map(|&s| s == 1).collect())
            .collect();
        let vc = brute_force_vc(&words, 2);
        assert_eq!(vc.indices.len(), 2);
        assert!(vc.capped);
    }

    #[test]
    fn ldc_single_bit_and_round_trip() {
        let outer = StackedHadamardCode::new(CodeParams::new(4, 2, 1.0 / 6.0).unwrap());
        let inner = InnerCode::hadamard(2).unwrap();
        let ldc = build_ldc(&outer, &inner, &[5]).unwrap();
        assert_eq!(ldc.representatives.len(), 2);
        let (a, b) = (ldc.encode(0), ldc.encode(1));
        assert_ne!(a[1], b[1]);
        let c1 = concatenate(&outer, &inner).unwrap();
        let vc = brute_force_vc(c1.words(), 20);
        let ldc = build_ldc(&outer, &inner, &vc.indices).unwrap();
        for x in 0..1u64 << ldc.message_bits() {
            let z = ldc.encode(x);
            for (q, &i) in ldc.indices.iter().enumerate() {
                assert_eq!(ldc.read_concatenated(&z, i), x >> q & 1 == 1);
            }
        }
        // block 0 is constant, so no position in it can be shattered
        assert!(matches!(build_ldc(&outer, &inner, &[1]), Err(LdcError::NotShattered { .. })));
    }

    #[test]
    fn ldc_decode_uncorrupted_is_exact() {
        let outer = StackedHadamardCode::new(CodeParams::new(6, 2, 1.0 / 6.0).unwrap());
        let inner = InnerCode::hadamard(2).unwrap();
        let c1 = concatenate(&outer, &inner).unwrap();
        let vc = brute_force_vc(c1.words(), 20);
        let ldc = build_ldc(&outer, &inner, &vc.indices).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for x in 0..1u64 << ldc.message_bits() {
            let z = ldc.encode(x);
            for (q, &i) in ldc.indices.iter().enumerate() {
                let d = ldc.decode(&z, i, &mut rng).unwrap();
                assert_eq!(d.bit, x >> q & 1 == 1);
                assert_ne!(d.queries.first, d.queries.second);
            }
        }
        assert!(matches!(ldc.decode(&ldc.encode(0), 0, &mut rng), Err(LdcError::NotInIndexSet(0))));
    }
}

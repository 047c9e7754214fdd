//! The Hadamard code, the stacked-Hadamard 2-query zero-error LCC and its
//! local corrector.
//!
//! Index convention: a Hadamard position is an integer whose binary
//! expansion, least-significant bit first, gives ξ = (ξ₁, …, ξ_r). So for
//! `r = 2` the positions 0, 1, 2, 3 are ξ = 00, 10, 01, 11.
//!
//! A stacked codeword packs `b` Hadamard codewords bitwise: bit `i` of the
//! symbol at position `a` is the Hadamard encoding of message row `i`,
//! evaluated at `a`. With `blocks > 1` the message columns are split evenly
//! and each block is an independent stacked-Hadamard codeword.

use num_rational::Ratio;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported symbol width in bits.
pub const MAX_SYMBOL_BITS: u32 = 32;
/// Largest supported Hadamard dimension per block (block length `2^r`).
pub const MAX_INDEX_BITS: usize = 30;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("empty input vector")]
    EmptyInput,
    #[error("invalid code parameters: {0}")]
    InvalidParams(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("position {position} out of range for length {length}")]
    OutOfRange { position: usize, length: usize },
    #[error("symbol {symbol} does not fit in {bits} bits")]
    SymbolTooWide { symbol: u32, bits: u32 },
    #[error("corruption pattern invalid: {0}")]
    InvalidPattern(String),
}

/// Parameters of a stacked-Hadamard code.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeParams {
    k: usize,
    b: u32,
    blocks: usize,
    delta: f64,
}

impl CodeParams {
    /// Single-block code with message length `k` over a `2^b` alphabet.
    pub fn new(k: usize, b: u32, delta: f64) -> Result<Self, CodeError> {
        Self::with_blocks(k, b, 1, delta)
    }

    pub fn with_blocks(k: usize, b: u32, blocks: usize, delta: f64) -> Result<Self, CodeError> {
        if b == 0 || b > MAX_SYMBOL_BITS {
            return Err(CodeError::InvalidParams(format!(
                "b must be in 1..={MAX_SYMBOL_BITS}, got {b}"
            )));
        }
        if blocks == 0 {
            return Err(CodeError::InvalidParams("blocks must be positive".into()));
        }
        let per_row = b as usize * blocks;
        if k == 0 || k % per_row != 0 {
            return Err(CodeError::InvalidParams(format!(
                "b*blocks = {per_row} must divide k = {k}"
            )));
        }
        let r = k / per_row;
        if r > MAX_INDEX_BITS {
            return Err(CodeError::InvalidParams(format!(
                "block dimension k/(b*blocks) = {r} exceeds {MAX_INDEX_BITS}"
            )));
        }
        if !(delta > 0.0 && delta <= 1.0 / 6.0 + 1e-12) {
            return Err(CodeError::InvalidParams(format!(
                "delta must lie in (0, 1/6], got {delta}"
            )));
        }
        Ok(Self { k, b, blocks, delta })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn symbol_bits(&self) -> u32 {
        self.b
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Hadamard dimension of one block.
    pub fn index_bits(&self) -> usize {
        self.k / (self.b as usize * self.blocks)
    }

    /// Length of one block, `2^(k/(b*blocks))`.
    pub fn block_len(&self) -> usize {
        1usize << self.index_bits()
    }

    /// Codeword length in symbols.
    pub fn n(&self) -> usize {
        self.blocks * self.block_len()
    }

    /// Largest corruption count covered by the declared fraction.
    pub fn max_corruptions(&self) -> usize {
        (self.delta * self.n() as f64 + 1e-9).floor() as usize
    }

    fn symbol_mask(&self) -> u32 {
        if self.b == 32 {
            u32::MAX
        } else {
            (1u32 << self.b) - 1
        }
    }
}

/// A message of `k` bits, viewed as the `b × k/b` matrix `x[i][j] = bits[i*(k/b) + j]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    bits: Vec<bool>,
}

impl Message {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Message whose bit `t` is bit `t` of `index`.
    pub fn from_index(index: u64, k: usize) -> Self {
        Self {
            bits: (0..k).map(|t| t < 64 && (index >> t) & 1 == 1).collect(),
        }
    }

    pub fn zero(k: usize) -> Self {
        Self { bits: vec![false; k] }
    }

    pub fn random<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        Self {
            bits: (0..k).map(|_| rng.gen::<bool>()).collect(),
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn xor(&self, other: &Message) -> Message {
        Message {
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a ^ b).collect(),
        }
    }
}

/// A word of `n` symbols of `b` bits each.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "CodewordJson", into = "CodewordJson")]
pub struct Codeword {
    b: u32,
    symbols: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct CodewordJson {
    n: usize,
    b: u32,
    symbols: Vec<u32>,
}

impl From<Codeword> for CodewordJson {
    fn from(c: Codeword) -> Self {
        CodewordJson {
            n: c.symbols.len(),
            b: c.b,
            symbols: c.symbols,
        }
    }
}

impl TryFrom<CodewordJson> for Codeword {
    type Error = CodeError;

    fn try_from(j: CodewordJson) -> Result<Self, CodeError> {
        if j.n != j.symbols.len() {
            return Err(CodeError::LengthMismatch {
                expected: j.n,
                actual: j.symbols.len(),
            });
        }
        Codeword::new(j.b, j.symbols)
    }
}

impl Codeword {
    pub fn new(b: u32, symbols: Vec<u32>) -> Result<Self, CodeError> {
        if b == 0 || b > MAX_SYMBOL_BITS {
            return Err(CodeError::InvalidParams(format!("symbol width {b}")));
        }
        if b < 32 {
            if let Some(&symbol) = symbols.iter().find(|&&s| s >> b != 0) {
                return Err(CodeError::SymbolTooWide { symbol, bits: b });
            }
        }
        Ok(Self { b, symbols })
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    pub fn symbol_bits(&self) -> u32 {
        self.b
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn into_symbols(self) -> Vec<u32> {
        self.symbols
    }
}

/// Number of positions where two equal-length words differ.
pub fn hamming_distance(a: &[u32], b: &[u32]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// A code small enough to list: codeword `index` for `index < size()`.
pub trait EnumerableCode: Sync {
    fn size(&self) -> usize;
    fn length(&self) -> usize;
    fn symbol_bits(&self) -> u32;
    fn codeword(&self, index: usize) -> Vec<u32>;
}

/// A code given by an explicit list of codewords.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeTable {
    length: usize,
    symbol_bits: u32,
    words: Vec<Vec<u32>>,
}

impl CodeTable {
    pub fn new(length: usize, symbol_bits: u32, words: Vec<Vec<u32>>) -> Result<Self, CodeError> {
        if symbol_bits == 0 || symbol_bits > MAX_SYMBOL_BITS {
            return Err(CodeError::InvalidParams(format!("symbol width {symbol_bits}")));
        }
        for w in &words {
            if w.len() != length {
                return Err(CodeError::LengthMismatch {
                    expected: length,
                    actual: w.len(),
                });
            }
            if symbol_bits < 32 {
                if let Some(&symbol) = w.iter().find(|&&s| s >> symbol_bits != 0) {
                    return Err(CodeError::SymbolTooWide {
                        symbol,
                        bits: symbol_bits,
                    });
                }
            }
        }
        Ok(Self {
            length,
            symbol_bits,
            words,
        })
    }

    pub fn from_code(code: &dyn EnumerableCode) -> Self {
        Self {
            length: code.length(),
            symbol_bits: code.symbol_bits(),
            words: (0..code.size()).map(|i| code.codeword(i)).collect(),
        }
    }

    pub fn words(&self) -> &[Vec<u32>] {
        &self.words
    }
}

impl EnumerableCode for CodeTable {
    fn size(&self) -> usize {
        self.words.len()
    }

    fn length(&self) -> usize {
        self.length
    }

    fn symbol_bits(&self) -> u32 {
        self.symbol_bits
    }

    fn codeword(&self, index: usize) -> Vec<u32> {
        self.words[index].clone()
    }
}

/// Hadamard encoding: entry `ξ` is `<y, ξ> mod 2` under the LSB-first index order.
pub fn hadamard_encode(y: &[bool]) -> Result<Vec<bool>, CodeError> {
    if y.is_empty() {
        return Err(CodeError::EmptyInput);
    }
    if y.len() > MAX_INDEX_BITS {
        return Err(CodeError::InvalidParams(format!(
            "Hadamard dimension {} exceeds {MAX_INDEX_BITS}",
            y.len()
        )));
    }
    let mask = bits_to_mask(y);
    Ok((0..1u64 << y.len())
        .map(|xi| (mask & xi).count_ones() & 1 == 1)
        .collect())
}

fn bits_to_mask(bits: &[bool]) -> u64 {
    bits.iter()
        .enumerate()
        .fold(0u64, |m, (t, &bit)| m | ((bit as u64) << t))
}

/// The stacked-Hadamard code for a fixed parameter set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StackedHadamardCode {
    params: CodeParams,
}

impl StackedHadamardCode {
    pub fn new(params: CodeParams) -> Self {
        Self { params }
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    /// Per block, the `b` row masks (bit `t` = y_{t+1} of that row's block slice).
    fn row_masks(&self, m: &Message) -> Vec<Vec<u64>> {
        let p = &self.params;
        let cols = p.k / p.b as usize;
        let r = p.index_bits();
        (0..p.blocks)
            .map(|block| {
                (0..p.b as usize)
                    .map(|row| {
                        let start = row * cols + block * r;
                        bits_to_mask(&m.bits[start..start + r])
                    })
                    .collect()
            })
            .collect()
    }

    pub fn encode(&self, m: &Message) -> Result<Codeword, CodeError> {
        stacked_encode(&self.params, m)
    }
}

/// Encodes `m` with the stacked-Hadamard code described by `params`.
pub fn stacked_encode(params: &CodeParams, m: &Message) -> Result<Codeword, CodeError> {
    if m.len() != params.k {
        return Err(CodeError::LengthMismatch {
            expected: params.k,
            actual: m.len(),
        });
    }
    let code = StackedHadamardCode::new(*params);
    let masks = code.row_masks(m);
    let block_len = params.block_len() as u64;
    let mut symbols = Vec::with_capacity(params.n());
    for rows in &masks {
        for xi in 0..block_len {
            let symbol = rows.iter().enumerate().fold(0u32, |s, (i, &mask)| {
                s | ((((mask & xi).count_ones() & 1) as u32) << i)
            });
            symbols.push(symbol);
        }
    }
    Ok(Codeword {
        b: params.b,
        symbols,
    })
}

impl EnumerableCode for StackedHadamardCode {
    fn size(&self) -> usize {
        1usize << self.params.k
    }

    fn length(&self) -> usize {
        self.params.n()
    }

    fn symbol_bits(&self) -> u32 {
        self.params.b
    }

    fn codeword(&self, index: usize) -> Vec<u32> {
        let m = Message::from_index(index as u64, self.params.k);
        stacked_encode(&self.params, &m)
            .expect("message length matches parameters")
            .symbols
    }
}

/// The two positions a local correction read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryPair {
    pub first: usize,
    pub second: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Correction {
    pub symbol: u32,
    /// `None` when the position is a block origin, whose symbol is always 0.
    pub queries: Option<QueryPair>,
}

fn split_position(params: &CodeParams, a: usize) -> Result<(usize, usize), CodeError> {
    if a >= params.n() {
        return Err(CodeError::OutOfRange {
            position: a,
            length: params.n(),
        });
    }
    let m = params.block_len();
    Ok(((a / m) * m, a % m))
}

fn check_word(params: &CodeParams, word: &[u32]) -> Result<(), CodeError> {
    if word.len() != params.n() {
        return Err(CodeError::LengthMismatch {
            expected: params.n(),
            actual: word.len(),
        });
    }
    Ok(())
}

/// Two-query local corrector: samples ξ in the block of `a`, reads `ξ` and
/// `a ⊕ ξ` and returns the XOR of the two symbols.
pub fn local_correct<R: Rng + ?Sized>(
    params: &CodeParams,
    received: &[u32],
    a: usize,
    rng: &mut R,
) -> Result<Correction, CodeError> {
    check_word(params, received)?;
    let (base, local) = split_position(params, a)?;
    if local == 0 {
        return Ok(Correction {
            symbol: 0,
            queries: None,
        });
    }
    let xi = rng.gen_range(0..params.block_len());
    let first = base + xi;
    let second = base + (local ^ xi);
    Ok(Correction {
        symbol: (received[first] ^ received[second]) & params.symbol_mask(),
        queries: Some(QueryPair { first, second }),
    })
}

/// Probability over uniform ξ that [`local_correct`] returns `original[a]`,
/// computed by enumerating every ξ of the block.
pub fn exact_success_probability(
    params: &CodeParams,
    original: &[u32],
    received: &[u32],
    a: usize,
) -> Result<Ratio<u64>, CodeError> {
    check_word(params, original)?;
    check_word(params, received)?;
    let (base, local) = split_position(params, a)?;
    let m = params.block_len();
    if local == 0 {
        return Ok(Ratio::from_integer(
            (original[a] == 0) as u64,
        ));
    }
    let target = original[a];
    let good = (0..m)
        .filter(|&xi| {
            (received[base + xi] ^ received[base + (local ^ xi)]) & params.symbol_mask() == target
        })
        .count();
    Ok(Ratio::new(good as u64, m as u64))
}

/// Positions to overwrite and the symbols written there.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorruptionPattern {
    pub positions: Vec<usize>,
    pub replacements: Vec<u32>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorruptionReport {
    /// Hamming distance between the output and the input word.
    pub changed: usize,
    /// Listed positions whose replacement equals the original symbol.
    pub non_corruptions: Vec<usize>,
}

impl CorruptionPattern {
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    /// `count` distinct uniformly random positions, each replaced by a
    /// uniformly random different symbol.
    pub fn random<R: Rng + ?Sized>(c: &Codeword, count: usize, rng: &mut R) -> Self {
        let count = count.min(c.len());
        let mut positions = sample(rng, c.len(), count).into_vec();
        positions.sort_unstable();
        let replacements = positions
            .iter()
            .map(|&p| c.symbols[p] ^ random_nonzero(c.b, rng))
            .collect();
        Self {
            positions,
            replacements,
        }
    }

    /// The pattern maximizing the number of bad ξ for correcting `a`: one
    /// position from each of `count` distinct query pairs {ξ, a⊕ξ} of the
    /// block, so exactly `2·count` of the ξ choices read a corrupted symbol.
    pub fn adversarial(params: &CodeParams, c: &Codeword, a: usize, count: usize) -> Result<Self, CodeError> {
        check_word(params, c.symbols())?;
        let (base, local) = split_position(params, a)?;
        let m = params.block_len();
        let mut positions: Vec<usize> = if local == 0 {
            (0..m).map(|xi| base + xi).take(count).collect()
        } else {
            (0..m)
                .filter(|&xi| xi < (local ^ xi))
                .map(|xi| base + xi)
                .take(count)
                .collect()
        };
        // More corruptions than pairs: fill the remaining positions in order.
        if positions.len() < count {
            let chosen: std::collections::BTreeSet<usize> = positions.iter().copied().collect();
            positions.extend(
                (0..params.n())
                    .filter(|p| !chosen.contains(p))
                    .take(count - chosen.len()),
            );
        }
        positions.sort_unstable();
        let replacements = positions.iter().map(|&p| c.symbols[p] ^ 1).collect();
        Ok(Self {
            positions,
            replacements,
        })
    }
}

fn random_nonzero<R: Rng + ?Sized>(b: u32, rng: &mut R) -> u32 {
    let max = if b == 32 { u32::MAX } else { (1u32 << b) - 1 };
    rng.gen_range(1..=max)
}

/// Applies `pattern` to a copy of `c`.
pub fn corrupt(c: &Codeword, pattern: &CorruptionPattern) -> Result<(Vec<u32>, CorruptionReport), CodeError> {
    if pattern.positions.len() != pattern.replacements.len() {
        return Err(CodeError::InvalidPattern(format!(
            "{} positions but {} replacements",
            pattern.positions.len(),
            pattern.replacements.len()
        )));
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut word = c.symbols.clone();
    let mut report = CorruptionReport::default();
    for (&p, &s) in pattern.positions.iter().zip(&pattern.replacements) {
        if p >= c.len() {
            return Err(CodeError::OutOfRange {
                position: p,
                length: c.len(),
            });
        }
        if !seen.insert(p) {
            return Err(CodeError::InvalidPattern(format!("duplicate position {p}")));
        }
        if c.b < 32 && s >> c.b != 0 {
            return Err(CodeError::SymbolTooWide { symbol: s, bits: c.b });
        }
        if s == c.symbols[p] {
            report.non_corruptions.push(p);
        }
        word[p] = s;
    }
    report.changed = hamming_distance(&word, &c.symbols);
    Ok((word, report))
}

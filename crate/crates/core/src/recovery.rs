//! Full-codeword decoding: weighted-vote recovery of the T1 coordinates,
//! then propagation through the recovery matchings from a small seed.

use std::collections::BTreeMap;

use num_traits::ToPrimitive;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::normal_form::NormalForm;
use crate::propagation::{find_seed, ClosureState, LabeledMatchingGraph, PropagationError, SeedOptions, SeedTrace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecoveryError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("word has length {actual}, expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("summand n·p_v = {value} exceeds 4/τ = {cap} at coordinate {coordinate}, position {position}")]
    Unbounded {
        coordinate: usize,
        position: usize,
        value: f64,
        cap: f64,
    },
    #[error("propagation reached {reached} of {n} coordinates")]
    Incomplete { reached: usize, n: usize },
    #[error(transparent)]
    Propagation(#[from] PropagationError),
}

/// Sample size and constants of the weighted vote.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimatorConfig {
    /// Number of samples drawn with repetition.
    pub r: usize,
    pub tau: f64,
    /// `C` in `r = ⌈C·τ⁻²·ln n⌉`.
    pub c: f64,
    /// Allowed deviation of `Σ_σ W_σ` from 1.
    pub weight_slack: f64,
}

pub const DEFAULT_SAMPLE_CONSTANT: f64 = 64.0;
pub const DEFAULT_WEIGHT_SLACK: f64 = 1.0 / 20.0;

impl EstimatorConfig {
    /// `r = ⌈C·τ⁻²·ln n⌉`, at least 1.
    pub fn new(n: usize, tau: f64, c: f64) -> Result<Self, RecoveryError> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(RecoveryError::InvalidConfig(format!("tau {tau} outside (0, 1]")));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(RecoveryError::InvalidConfig(format!("sample constant {c} must be positive")));
        }
        let r = (c / (tau * tau) * (n.max(1) as f64).ln()).ceil().max(1.0) as usize;
        Ok(Self {
            r,
            tau,
            c,
            weight_slack: DEFAULT_WEIGHT_SLACK,
        })
    }

    /// A fixed sample count, for experiments below the default size.
    pub fn with_samples(tau: f64, r: usize) -> Result<Self, RecoveryError> {
        if r == 0 {
            return Err(RecoveryError::InvalidConfig("r must be at least 1".into()));
        }
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(RecoveryError::InvalidConfig(format!("tau {tau} outside (0, 1]")));
        }
        Ok(Self {
            r,
            tau,
            c: f64::NAN,
            weight_slack: DEFAULT_WEIGHT_SLACK,
        })
    }
}

/// Answers queries from a fixed word and remembers which positions were read.
pub struct CountingOracle<'a> {
    word: &'a [u32],
    seen: Vec<bool>,
    distinct: usize,
}

impl<'a> CountingOracle<'a> {
    pub fn new(word: &'a [u32]) -> Self {
        Self {
            word,
            seen: vec![false; word.len()],
            distinct: 0,
        }
    }

    pub fn query(&mut self, i: usize) -> u32 {
        if !self.seen[i] {
            self.seen[i] = true;
            self.distinct += 1;
        }
        self.word[i]
    }

    pub fn distinct(&self) -> usize {
        self.distinct
    }

    pub fn positions(&self) -> Vec<usize> {
        (0..self.seen.len()).filter(|&i| self.seen[i]).collect()
    }
}

/// Vote weights for one T1 coordinate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightTable {
    pub coordinate: usize,
    pub weights: BTreeMap<u32, f64>,
    pub chosen: u32,
}

impl WeightTable {
    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct T1Recovery {
    pub symbols: BTreeMap<usize, u32>,
    /// Sampled positions, with repetition, in draw order.
    pub samples: Vec<usize>,
    pub tables: Vec<WeightTable>,
    /// Largest `n·p_v` over sampled positions.
    pub max_summand: f64,
}

/// Recovers every T1 coordinate by the weighted plurality vote over `r`
/// uniformly sampled positions.
pub fn recover_t1<R: Rng + ?Sized>(
    nf: &NormalForm,
    oracle: &mut CountingOracle<'_>,
    cfg: &EstimatorConfig,
    rng: &mut R,
) -> Result<T1Recovery, RecoveryError> {
    if cfg.r == 0 {
        return Err(RecoveryError::InvalidConfig("r must be at least 1".into()));
    }
    let n = nf.n;
    if oracle.word.len() != n {
        return Err(RecoveryError::LengthMismatch {
            expected: n,
            actual: oracle.word.len(),
        });
    }
    if nf.t1.is_empty() {
        return Ok(T1Recovery {
            symbols: BTreeMap::new(),
            samples: Vec::new(),
            tables: Vec::new(),
            max_summand: 0.0,
        });
    }
    let samples: Vec<usize> = (0..cfg.r).map(|_| rng.gen_range(0..n)).collect();
    let answers: Vec<u32> = samples.iter().map(|&z| oracle.query(z)).collect();
    let cap = 4.0 / nf.tau.to_f64().unwrap_or(cfg.tau);
    let mut max_summand: f64 = 0.0;
    let mut symbols = BTreeMap::new();
    let mut tables = Vec::with_capacity(nf.t1.len());
    for (&u, corr) in &nf.t1 {
        let mut weights: BTreeMap<u32, f64> = BTreeMap::new();
        for (sigma, mass) in corr.response_mass(None, 0) {
            *weights.entry(sigma).or_default() += mass.to_f64().unwrap_or(0.0);
        }
        for (&z, &answer) in samples.iter().zip(&answers) {
            let scaled = n as f64 * corr.probability(z).to_f64().unwrap_or(0.0);
            if scaled == 0.0 {
                continue;
            }
            if scaled > cap * (1.0 + 1e-12) {
                return Err(RecoveryError::Unbounded {
                    coordinate: u,
                    position: z,
                    value: scaled,
                    cap,
                });
            }
            max_summand = max_summand.max(scaled);
            for (sigma, mass) in corr.response_mass(Some(z), answer) {
                *weights.entry(sigma).or_default() += n as f64 * mass.to_f64().unwrap_or(0.0) / cfg.r as f64;
            }
        }
        let mut chosen = 0u32;
        let mut best = f64::NEG_INFINITY;
        for (&sigma, &w) in &weights {
            if w > best {
                best = w;
                chosen = sigma;
            }
        }
        symbols.insert(u, chosen);
        tables.push(WeightTable {
            coordinate: u,
            weights,
            chosen,
        });
    }
    Ok(T1Recovery {
        symbols,
        samples,
        tables,
        max_summand,
    })
}

/// Where a decoded coordinate's symbol came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    SampledT1,
    Propagated,
    Seed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecodeReport {
    pub recovered: Vec<u32>,
    pub success: bool,
    /// Sample draws plus seed queries.
    pub queries_total: usize,
    pub sample_draws: usize,
    pub seed_size: usize,
    pub distinct_queries: usize,
    pub query_positions: Vec<usize>,
    pub provenance: Vec<Provenance>,
    /// `queries_total / (τ⁻⁴ · log₂ n)`.
    pub query_constant: f64,
    /// Smallest `Σ_σ W_σ` over T1 coordinates.
    pub min_weight_total: Option<f64>,
    pub max_weight_total: Option<f64>,
}

/// The matching graph of the T2 coordinates, δ = τ/4.
pub fn normal_form_graph(nf: &NormalForm) -> Result<LabeledMatchingGraph, RecoveryError> {
    let mut matchings = vec![Vec::new(); nf.n];
    for (&i, entry) in &nf.t2 {
        matchings[i] = entry.edges.iter().map(|e| (e.lo, e.hi)).collect();
    }
    let delta = nf.tau.to_f64().unwrap_or(f64::NAN) / 4.0;
    Ok(LabeledMatchingGraph::new(nf.n, delta, matchings)?)
}

/// Decoder state that depends only on the normal form: the seed and the
/// order in which propagation recovers every T2 coordinate.
pub struct Decoder<'a> {
    nf: &'a NormalForm,
    trace: SeedTrace,
    /// `(coordinate, u, w)`: recover the coordinate from the symbols at `u` and `w`.
    plan: Vec<(usize, usize, usize)>,
}

impl<'a> Decoder<'a> {
    pub fn new(nf: &'a NormalForm) -> Result<Self, RecoveryError> {
        let graph = normal_form_graph(nf)?;
        let t1 = nf.t1_coordinates();
        let trace = find_seed(&graph, &t1, SeedOptions::default())?;
        let mut state = ClosureState::with_derivation(&graph);
        state.extend(trace.seed.iter().chain(&t1).copied())?;
        if !state.is_full() {
            return Err(RecoveryError::Incomplete {
                reached: state.len(),
                n: nf.n,
            });
        }
        let plan = state
            .order()
            .filter_map(|v| state.trigger(v).map(|(u, w)| (v, u, w)))
            .collect();
        Ok(Self { nf, trace, plan })
    }

    pub fn trace(&self) -> &SeedTrace {
        &self.trace
    }

    pub fn seed(&self) -> &[usize] {
        &self.trace.seed
    }

    /// Fills in every coordinate from known symbols on the seed and T1.
    pub fn propagate(&self, known: &BTreeMap<usize, u32>) -> Result<Vec<u32>, RecoveryError> {
        let n = self.nf.n;
        let mut word = vec![0u32; n];
        let mut have = vec![false; n];
        for (&i, &s) in known {
            word[i] = s;
            have[i] = true;
        }
        for &(v, u, w) in &self.plan {
            if !(have[u] && have[w]) {
                return Err(RecoveryError::Incomplete {
                    reached: have.iter().filter(|&&h| h).count(),
                    n,
                });
            }
            let entry = &self.nf.t2[&v];
            word[v] = entry
                .recover(u, w, word[u], word[w])
                .expect("the plan uses edges of the coordinate's matching");
            have[v] = true;
        }
        if let Some(missing) = have.iter().position(|&h| !h) {
            return Err(RecoveryError::InvalidConfig(format!("coordinate {missing} is neither known nor derived")));
        }
        Ok(word)
    }

    /// Decodes `codeword` through a counting oracle.
    pub fn decode<R: Rng + ?Sized>(
        &self,
        codeword: &[u32],
        cfg: &EstimatorConfig,
        rng: &mut R,
    ) -> Result<DecodeReport, RecoveryError> {
        let n = self.nf.n;
        if codeword.len() != n {
            return Err(RecoveryError::LengthMismatch {
                expected: n,
                actual: codeword.len(),
            });
        }
        let mut oracle = CountingOracle::new(codeword);
        let t1 = recover_t1(self.nf, &mut oracle, cfg, rng)?;
        let mut known = t1.symbols.clone();
        for &s in &self.trace.seed {
            known.insert(s, oracle.query(s));
        }
        let recovered = self.propagate(&known)?;
        let mut provenance = vec![Provenance::Propagated; n];
        for &i in t1.symbols.keys() {
            provenance[i] = Provenance::SampledT1;
        }
        for &s in &self.trace.seed {
            provenance[s] = Provenance::Seed;
        }
        let queries_total = t1.samples.len() + self.trace.seed.len();
        let totals: Vec<f64> = t1.tables.iter().map(WeightTable::total).collect();
        Ok(DecodeReport {
            success: recovered == codeword,
            recovered,
            queries_total,
            sample_draws: t1.samples.len(),
            seed_size: self.trace.seed.len(),
            distinct_queries: oracle.distinct(),
            query_positions: oracle.positions(),
            provenance,
            query_constant: query_constant(queries_total, n, cfg.tau),
            min_weight_total: totals.iter().copied().reduce(f64::min),
            max_weight_total: totals.iter().copied().reduce(f64::max),
        })
    }
}

/// `queries / (τ⁻⁴ · log₂ n)`.
pub fn query_constant(queries: usize, n: usize, tau: f64) -> f64 {
    let scale = tau.powi(-4) * (n as f64).log2();
    if scale > 0.0 {
        queries as f64 / scale
    } else {
        0.0
    }
}

/// One-shot decode: builds the decoder and runs it once.
pub fn decode_full<R: Rng + ?Sized>(
    nf: &NormalForm,
    codeword: &[u32],
    cfg: &EstimatorConfig,
    rng: &mut R,
) -> Result<DecodeReport, RecoveryError> {
    Decoder::new(nf)?.decode(codeword, cfg, rng)
}

/// Upper bound `2(t·b + 1)` on `log₂|C|` for a decoder reading `t` symbols of `b` bits.
pub fn fano_bound(t: u64, sigma_bits: u32) -> u64 {
    2 * (t * sigma_bits as u64 + 1)
}

/// `δ·(k / log₂|Σ|)²`.
pub fn kt_lower_n(k: usize, delta: f64, sigma_bits: u32) -> f64 {
    delta * (k as f64 / sigma_bits as f64).powi(2)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundInputs {
    pub n: usize,
    pub k: usize,
    pub tau: f64,
    pub sigma_bits: u32,
    /// Corruption fraction for the quadratic lower bound.
    pub delta: f64,
    /// Measured symbols read by the decoder.
    pub t: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub t: usize,
    pub sigma_bits: u32,
    pub fano_log2_c_max: u64,
    /// `C·τ⁻⁴·log₂ n·log₂|Σ|` with the measured constant `C`.
    pub theorem_log2_c_max: f64,
    pub measured_constant: f64,
    pub kt_lower_n: f64,
    /// `log₂|C|` of the code itself.
    pub construction_log2_c: usize,
    /// `k / (log₂|Σ| · log₂ n)`; 1 for the tight construction.
    pub construction_ratio: f64,
    /// `theorem_log2_c_max / k`.
    pub agreement_factor: f64,
    pub fano_holds: bool,
}

pub fn bound_report(inputs: &BoundInputs) -> BoundReport {
    let log_n = (inputs.n as f64).log2();
    let measured_constant = query_constant(inputs.t, inputs.n, inputs.tau);
    let theorem = measured_constant * inputs.tau.powi(-4) * log_n * inputs.sigma_bits as f64;
    let fano = fano_bound(inputs.t as u64, inputs.sigma_bits);
    BoundReport {
        t: inputs.t,
        sigma_bits: inputs.sigma_bits,
        fano_log2_c_max: fano,
        theorem_log2_c_max: theorem,
        measured_constant,
        kt_lower_n: kt_lower_n(inputs.k, inputs.delta, inputs.sigma_bits),
        construction_log2_c: inputs.k,
        construction_ratio: if log_n > 0.0 {
            inputs.k as f64 / (inputs.sigma_bits as f64 * log_n)
        } else {
            0.0
        },
        agreement_factor: if inputs.k > 0 { theorem / inputs.k as f64 } else { 0.0 },
        fano_holds: inputs.k as u64 <= fano,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{CodeParams, EnumerableCode, StackedHadamardCode};
    use crate::normal_form::{extract_normal_form, HadamardQuerySpec, PairRecovery, Prob, SmoothOneQueryCorrector};
    use num_rational::Ratio;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hadamard_nf(k: usize, b: u32, tau: Prob) -> (StackedHadamardCode, NormalForm) {
        let params = CodeParams::new(k, b, 1.0 / 6.0).unwrap();
        let code = StackedHadamardCode::new(params);
        let nf = extract_normal_form(&HadamardQuerySpec::new(params), &code, tau).unwrap();
        (code, nf)
    }

    #[test]
    fn sample_count_formula() {
        let cfg = EstimatorConfig::new(256, 0.5, 64.0).unwrap();
        assert_eq!(cfg.r, (64.0 * 4.0 * 256f64.ln()).ceil() as usize);
        assert!(EstimatorConfig::with_samples(0.5, 0).is_err());
        assert!(EstimatorConfig::new(256, 0.0, 64.0).is_err());
    }

    #[test]
    fn empty_t1_makes_no_queries() {
        let mut nf = hadamard_nf(4, 2, Prob::from_integer(1)).1;
        nf.t1.clear();
        let word = vec![0u32; 4];
        let mut oracle = CountingOracle::new(&word);
        let cfg = EstimatorConfig::with_samples(1.0, 10).unwrap();
        let rec = recover_t1(&nf, &mut oracle, &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(rec.symbols.is_empty());
        assert_eq!(oracle.distinct(), 0);
    }

    #[test]
    fn truthful_corrector_recovers_with_one_sample() {
        // R_v always answers 1 = c_0, whatever it reads
        let n = 8;
        let parts = (0..n)
            .map(|v| {
                let table: BTreeMap<(u32, u32), u32> = [((0, 0), 1), ((1, 1), 1)].into_iter().collect();
                (Some(v), Ratio::new(1, n as u64), PairRecovery::Table(table))
            })
            .collect();
        let corr = SmoothOneQueryCorrector::from_parts(0, parts, vec![]);
        let nf = NormalForm {
            n,
            tau: Prob::from_integer(1),
            t1: [(0, corr)].into_iter().collect(),
            t2: BTreeMap::new(),
            smoothness_vacuous: false,
        };
        let word = vec![1, 0, 1, 1, 0, 0, 1, 0];
        let cfg = EstimatorConfig::with_samples(1.0, 1).unwrap();
        for seed in 0..20 {
            let mut oracle = CountingOracle::new(&word);
            let rec = recover_t1(&nf, &mut oracle, &cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert_eq!(rec.symbols[&0], 1);
            assert_eq!(oracle.distinct(), 1);
        }
    }

    #[test]
    fn decodes_uncorrupted_codewords() {
        let (code, nf) = hadamard_nf(12, 3, Ratio::new(1, 6));
        let decoder = Decoder::new(&nf).unwrap();
        let cfg = EstimatorConfig::new(nf.n, 1.0 / 6.0, DEFAULT_SAMPLE_CONSTANT).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for idx in (0..4096).step_by(97) {
            let c = code.codeword(idx);
            let report = decoder.decode(&c, &cfg, &mut rng).unwrap();
            assert!(report.success);
            assert_eq!(report.queries_total, cfg.r + decoder.seed().len());
            assert!(report.distinct_queries <= report.queries_total);
            assert_eq!(report.provenance[0], Provenance::SampledT1);
        }
    }

    #[test]
    fn seed_and_t1_determine_everything() {
        let (code, nf) = hadamard_nf(8, 2, Ratio::new(1, 4));
        let decoder = Decoder::new(&nf).unwrap();
        for idx in 0..code.size() {
            let c = code.codeword(idx);
            let known = decoder
                .seed()
                .iter()
                .chain(&nf.t1_coordinates())
                .map(|&i| (i, c[i]))
                .collect();
            assert_eq!(decoder.propagate(&known).unwrap(), c);
        }
    }

    #[test]
    fn bounds() {
        assert_eq!(fano_bound(0, 1), 2);
        assert_eq!(fano_bound(10, 3), 62);
        assert_eq!(2 * fano_bound(10, 3) - fano_bound(20, 3), 2);
        assert_eq!(kt_lower_n(100, 0.1, 1), 1000.0);
        let inputs = BoundInputs {
            n: 4096,
            k: 36,
            tau: 1.0 / 6.0,
            sigma_bits: 3,
            delta: 1.0 / 6.0,
            t: 20000,
        };
        let a = bound_report(&inputs);
        assert_eq!(a, bound_report(&inputs));
        assert_eq!(a.construction_ratio, 1.0);
        assert!(a.fano_holds);
        assert!((a.theorem_log2_c_max - 3.0 * 20000.0).abs() < 1e-6);
    }
}

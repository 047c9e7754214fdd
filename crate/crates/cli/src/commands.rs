use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use lcc_lab::code::{
    corrupt, exact_success_probability, CodeParams, Codeword, CorruptionPattern, Message, StackedHadamardCode,
};
use lcc_lab::ldc::{brute_force_vc, build_ldc, concatenate, min_distance, DistanceReport, InnerCode, VcResult};
use lcc_lab::normal_form::{extract_normal_form, HadamardQuerySpec};
use lcc_lab::propagation::{
    find_seed, gen_instance, Instance, InstanceJson, InstanceKind, InstanceParams, LabeledMatchingGraph, MatchingGraph,
    PropagationError, SeedOptions, SeedTrace,
};
use lcc_lab::recovery::{bound_report, BoundInputs, BoundReport, Decoder, EstimatorConfig, RecoveryError};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{parse_fraction, write_csv, write_json, CSV_SCHEMA, SCHEMA};
use crate::{DecodeArgs, GenArgs, InstanceArgs, LdcDemoArgs, Outcome, SeedSearchArgs};

const THREADS_ENV: &str = "LCC_LAB_THREADS";

/// Runs `f` on a pool capped by `LCC_LAB_THREADS` when it is set.
pub fn with_thread_pool(f: impl FnOnce() -> Result<Outcome> + Send) -> Result<Outcome> {
    match std::env::var(THREADS_ENV) {
        Ok(value) => {
            let threads: usize = value
                .trim()
                .parse()
                .ok()
                .filter(|&t| t >= 1)
                .ok_or_else(|| anyhow!("{THREADS_ENV} must be a positive integer, got {value:?}"))?;
            rayon::ThreadPoolBuilder::new().num_threads(threads).build()?.install(f)
        }
        Err(_) => f(),
    }
}

/// Independent stream `trial` of the master seed.
fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn build_instance(args: &InstanceArgs) -> Result<(InstanceKind, Instance)> {
    let kind: InstanceKind = args
        .kind
        .as_deref()
        .ok_or_else(|| anyhow!("--kind is required"))?
        .parse()?;
    let n = args.n.ok_or_else(|| anyhow!("--n is required"))?;
    let randomized = matches!(kind, InstanceKind::Random | InstanceKind::Concat);
    let delta = match (randomized, args.delta) {
        (true, Some(d)) => d,
        (true, None) => bail!("--delta is required for {kind} instances"),
        (false, _) => 0.0,
    };
    let seed = match (randomized, args.seed) {
        (true, None) => bail!("--seed is required for {kind} instances"),
        (_, s) => s.unwrap_or(0),
    };
    Ok((kind, gen_instance(kind, InstanceParams { n, delta }, seed)?))
}

pub fn gen(args: GenArgs) -> Result<Outcome> {
    let (_, g) = build_instance(&args.instance)?;
    let json = g.to_json();
    let text = serde_json::to_string(&json)? + "\n";
    match &args.out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    eprintln!("n={} delta={} edges={}", g.vertex_count(), g.delta(), g.edge_count());
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct SeedSearchReport<'a> {
    schema: &'static str,
    kind: String,
    rng_seed: Option<u64>,
    n: usize,
    delta: f64,
    edges: usize,
    seed_size: usize,
    verified: bool,
    trace: &'a SeedTrace,
    wall_ms: f64,
}

#[derive(Serialize)]
struct SeedRow {
    schema: &'static str,
    kind: String,
    n: usize,
    delta: f64,
    seed_size: usize,
    phases_case1: usize,
    phases_case2: usize,
    wall_ms: f64,
    rng_seed: Option<u64>,
}

pub fn seed_search(args: SeedSearchArgs) -> Result<Outcome> {
    let (kind, g, rng_seed) = match &args.input {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let json: InstanceJson =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            let g = LabeledMatchingGraph::from_json(json)?;
            ("file".to_string(), Instance::Explicit(g), args.instance.seed)
        }
        None => {
            let (kind, g) = build_instance(&args.instance)?;
            (kind.to_string(), g, args.instance.seed)
        }
    };
    let start = Instant::now();
    let trace = match find_seed(&g, &[], SeedOptions::default()) {
        Ok(t) => t,
        Err(e @ PropagationError::Invariant(_)) => {
            eprintln!("seed search failed: {e}");
            return Ok(Outcome::Fail);
        }
        Err(e) => return Err(e.into()),
    };
    let wall_ms = elapsed_ms(start);
    let report = SeedSearchReport {
        schema: SCHEMA,
        kind: kind.clone(),
        rng_seed,
        n: trace.n,
        delta: trace.delta,
        edges: g.edge_count(),
        seed_size: trace.seed.len(),
        verified: trace.covered,
        trace: &trace,
        wall_ms,
    };
    write_json(args.out.as_deref(), &report)?;
    if let Some(path) = &args.csv {
        let row = SeedRow {
            schema: CSV_SCHEMA,
            kind,
            n: trace.n,
            delta: trace.delta,
            seed_size: trace.seed.len(),
            phases_case1: trace.phases_case1,
            phases_case2: trace.phases_case2,
            wall_ms,
            rng_seed,
        };
        write_csv(path, &[row])?;
    }
    if !trace.covered {
        eprintln!("closure of the seed reached {} of {} vertices", trace.reached, trace.n);
        eprintln!("{}", serde_json::to_string(&trace)?);
        return Ok(Outcome::Fail);
    }
    eprintln!(
        "n={} seed_size={} case1={} case2={}",
        trace.n,
        trace.seed.len(),
        trace.phases_case1,
        trace.phases_case2
    );
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct DecodeRow {
    schema: &'static str,
    n: usize,
    k: usize,
    b: u32,
    tau: f64,
    r: usize,
    seed_size: usize,
    queries_total: usize,
    success: bool,
    wall_ms: f64,
}

#[derive(Serialize)]
struct Stats {
    min: f64,
    max: f64,
    mean: f64,
}

impl Stats {
    fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let count = values.clone().count().max(1) as f64;
        Self {
            min: values.clone().fold(f64::INFINITY, f64::min),
            max: values.clone().fold(f64::NEG_INFINITY, f64::max),
            mean: values.sum::<f64>() / count,
        }
    }
}

#[derive(Serialize)]
struct CodeSummary {
    k: usize,
    b: u32,
    n: usize,
    delta: f64,
}

#[derive(Serialize)]
struct DecodeSummary {
    schema: &'static str,
    code: CodeSummary,
    tau: f64,
    r: usize,
    sample_constant: f64,
    t1: Vec<usize>,
    seed: Vec<usize>,
    smoothness_vacuous: bool,
    trials: u64,
    successes: usize,
    success_rate: f64,
    threshold: f64,
    queries_total: Stats,
    distinct_queries: Stats,
    query_constant: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    bounds: Option<BoundReport>,
    wall_ms: f64,
}

pub fn decode(args: DecodeArgs) -> Result<Outcome> {
    let start = Instant::now();
    let delta = parse_fraction(&args.delta)?.to_f64().unwrap_or(f64::NAN);
    let tau = parse_fraction(&args.tau)?;
    let tau_f = tau.to_f64().unwrap_or(f64::NAN);
    let params = CodeParams::new(args.k, args.b, delta)?;
    let code = StackedHadamardCode::new(params);
    let nf = extract_normal_form(&HadamardQuerySpec::new(params), &code, tau)?;
    let decoder = match Decoder::new(&nf) {
        Ok(d) => d,
        Err(e @ (RecoveryError::Incomplete { .. } | RecoveryError::Propagation(PropagationError::Invariant(_)))) => {
            eprintln!("decoder construction failed: {e}");
            return Ok(Outcome::Fail);
        }
        Err(e) => return Err(e.into()),
    };
    let n = params.n();
    let cfg = EstimatorConfig::new(n, tau_f, args.sample_constant)?;

    let rows: Vec<(DecodeRow, usize)> = (0..args.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(args.seed, trial);
            let message = Message::random(params.k(), &mut rng);
            let word = code.encode(&message)?;
            let t0 = Instant::now();
            let report = decoder.decode(word.symbols(), &cfg, &mut rng)?;
            Ok((
                DecodeRow {
                    schema: CSV_SCHEMA,
                    n,
                    k: params.k(),
                    b: params.symbol_bits(),
                    tau: tau_f,
                    r: cfg.r,
                    seed_size: report.seed_size,
                    queries_total: report.queries_total,
                    success: report.success,
                    wall_ms: elapsed_ms(t0),
                },
                report.distinct_queries,
            ))
        })
        .collect::<Result<_>>()?;

    let successes = rows.iter().filter(|(r, _)| r.success).count();
    let success_rate = successes as f64 / args.trials as f64;
    let threshold = 1.0 - 2.0 / n as f64;
    let queries = Stats::of(rows.iter().map(|(r, _)| r.queries_total as f64));
    let query_constant = lcc_lab::recovery::query_constant(queries.max as usize, n, tau_f);
    let bounds = args.emit_bounds.then(|| {
        bound_report(&BoundInputs {
            n,
            k: params.k(),
            tau: tau_f,
            sigma_bits: params.symbol_bits(),
            delta,
            t: decoder.seed().len() + nf.t1.len() + cfg.r,
        })
    });
    let summary = DecodeSummary {
        schema: SCHEMA,
        code: CodeSummary {
            k: params.k(),
            b: params.symbol_bits(),
            n,
            delta,
        },
        tau: tau_f,
        r: cfg.r,
        sample_constant: cfg.c,
        t1: nf.t1_coordinates(),
        seed: decoder.seed().to_vec(),
        smoothness_vacuous: nf.smoothness_vacuous,
        trials: args.trials,
        successes,
        success_rate,
        threshold,
        queries_total: queries,
        distinct_queries: Stats::of(rows.iter().map(|(_, d)| *d as f64)),
        query_constant,
        bounds,
        wall_ms: elapsed_ms(start),
    };
    write_json(args.out.as_deref(), &summary)?;
    if let Some(path) = &args.csv {
        let rows: Vec<&DecodeRow> = rows.iter().map(|(r, _)| r).collect();
        write_csv(path, &rows)?;
    }
    eprintln!("n={n} success_rate={success_rate:.4} threshold={threshold:.4} query_constant={query_constant:.3}");
    if summary.bounds.as_ref().is_some_and(|b| !b.fano_holds) {
        eprintln!("counting bound violated");
        return Ok(Outcome::Fail);
    }
    Ok(if success_rate >= threshold {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}

#[derive(Serialize)]
struct Distances {
    outer: DistanceReport,
    concatenated: DistanceReport,
    inner_delta0: f64,
    chain_holds: bool,
}

#[derive(Serialize)]
struct LdcDecodeStats {
    trials: u64,
    corruptions: usize,
    uncorrupted_success: f64,
    corrupted_success: f64,
    /// Mean exact success probability of the outer corrector on the corrupted words.
    corrupted_exact_mean: f64,
    queries_per_call: usize,
}

#[derive(Serialize)]
struct LdcDemoReport<'a> {
    schema: &'static str,
    outer: CodeSummary,
    inner: &'a InnerCode,
    distances: Distances,
    vc: &'a VcResult,
    ldc: &'a lcc_lab::ldc::LdcConstruction,
    decode: LdcDecodeStats,
    wall_ms: f64,
}

pub fn ldc_demo(args: LdcDemoArgs) -> Result<Outcome> {
    let start = Instant::now();
    if args.k > 10 {
        bail!("the demo enumerates the outer code; k must be at most 10, got {}", args.k);
    }
    let delta = parse_fraction(&args.delta)?.to_f64().unwrap_or(f64::NAN);
    let params = CodeParams::new(args.k, args.b, delta)?;
    let outer = StackedHadamardCode::new(params);
    let inner = InnerCode::hadamard(args.b)?;
    let c1 = concatenate(&outer, &inner)?;
    let outer_distance = min_distance(&outer)?;
    let concatenated = min_distance(&c1)?;
    let chain_holds = concatenated.fraction + 1e-12 >= outer_distance.fraction * inner.delta0();
    let vc = brute_force_vc(c1.words(), args.max_vc);
    if vc.indices.is_empty() {
        eprintln!("no shattered set found");
        return Ok(Outcome::Fail);
    }
    let certified = vc.verify(c1.words());
    let ldc = build_ldc(&outer, &inner, &vc.indices)?;
    let corruptions = (delta * params.n() as f64 + 1e-9).floor() as usize;

    let outcomes: Vec<(bool, bool, f64, bool)> = (0..args.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(args.seed, trial);
            let x = rng.gen_range(0..1u64 << ldc.message_bits());
            let q = rng.gen_range(0..ldc.message_bits());
            let i = ldc.indices[q];
            let expected = x >> q & 1 == 1;
            let z = ldc.encode(x);
            let clean = ldc.decode(&z, i, &mut rng)?;
            let word = Codeword::new(params.symbol_bits(), z.clone())?;
            let pattern = CorruptionPattern::random(&word, corruptions, &mut rng);
            let (received, _) = corrupt(&word, &pattern)?;
            let noisy = ldc.decode(&received, i, &mut rng)?;
            let exact = exact_success_probability(&params, &z, &received, ldc.block_of[q])?;
            let two_queries = clean.queries.first != clean.queries.second || params.block_len() == 1;
            Ok((
                clean.bit == expected,
                noisy.bit == expected,
                exact.to_f64().unwrap_or(0.0),
                two_queries,
            ))
        })
        .collect::<Result<_>>()?;
    let trials = args.trials as f64;
    let rate = |f: fn(&(bool, bool, f64, bool)) -> bool| outcomes.iter().filter(|o| f(o)).count() as f64 / trials;
    let stats = LdcDecodeStats {
        trials: args.trials,
        corruptions,
        uncorrupted_success: rate(|o| o.0),
        corrupted_success: rate(|o| o.1),
        corrupted_exact_mean: outcomes.iter().map(|o| o.2).sum::<f64>() / trials,
        queries_per_call: 2,
    };
    let pass = chain_holds
        && certified
        && outcomes.iter().all(|o| o.3)
        && stats.uncorrupted_success == 1.0
        && stats.corrupted_success >= 2.0 / 3.0;
    eprintln!(
        "vc={} concatenated_distance={} uncorrupted={:.4} corrupted={:.4}",
        vc.indices.len(),
        concatenated.fraction,
        stats.uncorrupted_success,
        stats.corrupted_success
    );
    let report = LdcDemoReport {
        schema: SCHEMA,
        outer: CodeSummary {
            k: params.k(),
            b: params.symbol_bits(),
            n: params.n(),
            delta,
        },
        inner: &inner,
        distances: Distances {
            outer: outer_distance,
            concatenated,
            inner_delta0: inner.delta0(),
            chain_holds,
        },
        vc: &vc,
        ldc: &ldc,
        decode: stats,
        wall_ms: elapsed_ms(start),
    };
    write_json(args.out.as_deref(), &report)?;
    Ok(if pass { Outcome::Pass } else { Outcome::Fail })
}

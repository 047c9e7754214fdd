//! `lcc-lab`: instance generation, seed search, decoding experiments and the
//! LDC demo.

mod commands;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "lcc-lab", version, about = "Zero-error 2-query locally correctable code laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a labeled matching instance.
    Gen(GenArgs),
    /// Find a seed set whose closure covers an instance.
    SeedSearch(SeedSearchArgs),
    /// Decode random stacked-Hadamard codewords end to end.
    Decode(DecodeArgs),
    /// Build an LDC from a small stacked-Hadamard code and exercise its decoder.
    LdcDemo(LdcDemoArgs),
}

#[derive(Args, Debug, Clone)]
pub struct InstanceArgs {
    /// Instance family: hadamard, random, concat or perfect.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Matching fraction for random and concat instances.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Master random seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Output file for the instance JSON (stdout when absent).
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
pub struct SeedSearchArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Read the instance from a JSON file instead of generating it.
    #[arg(long, conflicts_with_all = ["kind", "n", "delta"])]
    pub input: Option<std::path::PathBuf>,
    /// Output file for the JSON report (stdout when absent).
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    /// Output file for the CSV row.
    #[arg(long)]
    pub csv: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
pub struct DecodeArgs {
    #[arg(long)]
    pub k: usize,
    /// Bits per symbol.
    #[arg(long)]
    pub b: u32,
    /// Corruption fraction the code is declared for.
    #[arg(long, default_value = "1/6")]
    pub delta: String,
    /// Query-distribution parameter, as a fraction ("1/6") or decimal.
    #[arg(long, default_value = "1/6")]
    pub tau: String,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// `C` in the sample count `⌈C·τ⁻²·ln n⌉`.
    #[arg(long, default_value_t = lcc_lab::recovery::DEFAULT_SAMPLE_CONSTANT)]
    pub sample_constant: f64,
    /// Add a bound report comparing measured queries with the counting bound.
    #[arg(long)]
    pub emit_bounds: bool,
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    #[arg(long)]
    pub csv: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
pub struct LdcDemoArgs {
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub b: u32,
    /// Fraction of outer symbols corrupted in the noisy trials.
    #[arg(long, default_value = "1/6")]
    pub delta: String,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Largest index set the shattered-set search examines.
    #[arg(long, default_value_t = 20)]
    pub max_vc: usize,
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

/// How a command ended when it did not hit a usage or validation error.
pub enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = commands::with_thread_pool(|| match cli.command {
        Command::Gen(args) => commands::gen(args),
        Command::SeedSearch(args) => commands::seed_search(args),
        Command::Decode(args) => commands::decode(args),
        Command::LdcDemo(args) => commands::ldc_demo(args),
    });
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mirage_core::analysis::experiments::Fig7Mode;
use mirage_core::ciphers::BlockCipherKind;
use mirage_core::BugCompatFlag;

/// Budget used in place of the default 1e8 when --full-scale is given.
pub const FULL_SCALE_BUDGET: u64 = 1_000_000_000;
pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Debug, Parser)]
#[command(
    name = "mirage",
    version,
    about = "MIRAGE randomized-LLC simulator and experiment runner",
    long_about = "Runs the buckets-and-balls model, the full cache simulator and the \
                  figure experiments. Every run writes CSV files and a manifest.json \
                  into --out-dir.\n\nExit codes: 0 success, 1 self-check failed, \
                  2 configuration error, 3 capacity assertion (bug-compat), 4 I/O error."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Buckets-and-balls spill trials.
    Bnb(BnbArgs),
    /// Single cache run with optional per-reference outcome log.
    Cache(CacheArgs),
    /// Set-index distribution of random addresses per cipher.
    Uniformity(UniformityArgs),
    /// Tag occupancy after buggy and correct initialization.
    InitOccupancy(InitOccupancyArgs),
    /// Throws before spill versus ways, with and without ball removal.
    Fig6(Fig6Args),
    /// References before the first set-associative eviction versus cache size.
    Fig7(Fig7Args),
    /// Known-answer tests for every cipher backend.
    CiphersKat(KatArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Base RNG seed; per-trial seeds are derived from it.
    #[arg(long, default_value_t = 0, value_parser = parse_count)]
    pub seed: u64,

    /// Output directory (created if missing).
    #[arg(long, default_value = "mirage-out")]
    pub out_dir: PathBuf,

    /// Worker threads [default: available parallelism].
    #[arg(long)]
    pub threads: Option<usize>,

    /// Use the 1e9 budget instead of 1e8 where a budget applies.
    #[arg(long, default_value_t = false)]
    pub full_scale: bool,

    /// Enable a defective legacy behaviour (repeatable).
    #[arg(long = "bug-compat", value_name = "FLAG", value_parser = parse_flag)]
    pub bug_compat: Vec<BugCompatFlag>,
}

impl CommonArgs {
    pub fn budget(&self, explicit: Option<u64>) -> u64 {
        explicit.unwrap_or(if self.full_scale {
            FULL_SCALE_BUDGET
        } else {
            DEFAULT_BUDGET
        })
    }
}

#[derive(Debug, Args)]
pub struct BnbArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Ways per bucket (W); a list sweeps several values.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [14u32])]
    pub ways: Vec<u32>,

    /// Steady-state throw budget [default: 1e8, or 1e9 with --full-scale].
    #[arg(long, value_parser = parse_count)]
    pub throws: Option<u64>,

    #[arg(long, default_value_t = 1)]
    pub trials: u32,

    #[arg(long, default_value_t = 16384, value_parser = parse_usize)]
    pub buckets_per_skew: usize,

    #[arg(long, default_value_t = 8)]
    pub average_load: u32,
}

#[derive(Debug, Args)]
pub struct GeometryArgs {
    #[arg(long, default_value_t = 16384, value_parser = parse_usize)]
    pub sets_per_skew: usize,

    #[arg(long, default_value_t = 8)]
    pub base_ways: usize,

    #[arg(long, default_value_t = 6)]
    pub extra_ways: usize,

    /// Data-store lines [default: 2 * sets-per-skew * base-ways].
    #[arg(long, value_parser = parse_usize)]
    pub capacity: Option<usize>,

    #[arg(long, default_value = "prince64", value_parser = parse_cipher)]
    pub cipher: BlockCipherKind,
}

impl GeometryArgs {
    pub fn capacity(&self) -> usize {
        self.capacity
            .unwrap_or(2 * self.sets_per_skew * self.base_ways)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    /// Start with an empty cache.
    Empty,
    /// Install --init-lines random addresses through the install path.
    Valid,
    /// Each tag valid with --probability (needs --bug-compat=bernoulli-init).
    Bernoulli,
}

#[derive(Debug, Args)]
pub struct CacheArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    #[command(flatten)]
    pub geometry: GeometryArgs,

    #[arg(long, value_enum, default_value_t = InitArg::Valid)]
    pub init: InitArg,

    /// Lines installed by --init=valid [default: the data-store capacity].
    #[arg(long, value_parser = parse_usize)]
    pub init_lines: Option<usize>,

    /// Tag-valid probability for --init=bernoulli.
    #[arg(long, default_value_t = 0.5)]
    pub probability: f64,

    /// Measured references after initialization.
    #[arg(long, default_value = "1e6", value_parser = parse_count)]
    pub references: u64,

    /// Re-reference a recent address with this probability (recycled mix).
    #[arg(long)]
    pub reuse_probability: Option<f64>,

    /// Recent-address window for the recycled mix.
    #[arg(long, default_value_t = 1024)]
    pub reuse_window: usize,

    /// Write outcomes.csv with one row per reference.
    #[arg(long, default_value_t = false)]
    pub outcome_log: bool,

    /// Write snapshot.json with the final tag and data stores.
    #[arg(long, default_value_t = false)]
    pub snapshot: bool,
}

#[derive(Debug, Args)]
pub struct UniformityArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Ciphers to test; repeat or comma-separate [default: aes128, prince64,
    /// present80, plus buggy-present80 with --bug-compat=buggy-present].
    #[arg(long, value_delimiter = ',', value_parser = parse_cipher)]
    pub cipher: Vec<BlockCipherKind>,

    #[arg(long, default_value = "1e6", value_parser = parse_count)]
    pub addresses: u64,

    #[arg(long, default_value_t = 16384, value_parser = parse_usize)]
    pub num_sets: usize,

    #[arg(long, default_value_t = 1)]
    pub trials: u32,
}

#[derive(Debug, Args)]
pub struct InitOccupancyArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    #[command(flatten)]
    pub geometry: GeometryArgs,

    /// Tag-valid probability of the buggy initialization.
    #[arg(long, default_value_t = 0.5)]
    pub probability: f64,

    #[arg(long, default_value_t = 100)]
    pub trials: u32,
}

#[derive(Debug, Args)]
pub struct Fig6Args {
    #[command(flatten)]
    pub common: CommonArgs,

    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [9u32, 10, 11, 12, 13, 14])]
    pub ways: Vec<u32>,

    /// Steady-state throw budget [default: 1e8, or 1e9 with --full-scale].
    #[arg(long, value_parser = parse_count)]
    pub throws: Option<u64>,

    #[arg(long, default_value_t = 10)]
    pub trials: u32,

    #[arg(long, default_value_t = 16384, value_parser = parse_usize)]
    pub buckets_per_skew: usize,

    #[arg(long, default_value_t = 8)]
    pub average_load: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fig7ModeArg {
    Fixed,
    Original,
    Both,
}

impl Fig7ModeArg {
    pub fn modes(self) -> Vec<Fig7Mode> {
        match self {
            Fig7ModeArg::Fixed => vec![Fig7Mode::Fixed],
            Fig7ModeArg::Original => vec![Fig7Mode::Original],
            Fig7ModeArg::Both => vec![Fig7Mode::Fixed, Fig7Mode::Original],
        }
    }
}

#[derive(Debug, Args)]
pub struct Fig7Args {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Cache sizes in MB at 64-byte lines.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [1usize, 2, 4, 8, 16])]
    pub size_mb: Vec<usize>,

    /// Reference budget per run [default: 1e8, or 1e9 with --full-scale].
    #[arg(long, value_parser = parse_count)]
    pub references: Option<u64>,

    /// Cipher of the fixed configuration.
    #[arg(long, default_value = "aes128", value_parser = parse_cipher)]
    pub cipher: BlockCipherKind,

    /// Which configurations to run. The original configuration uses the
    /// --bug-compat flags, or all three when none are given.
    #[arg(long, value_enum, default_value_t = Fig7ModeArg::Both)]
    pub mode: Fig7ModeArg,

    #[arg(long, default_value_t = 1)]
    pub trials: u32,
}

#[derive(Debug, Args)]
pub struct KatArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Vector file to use instead of the bundled vectors.
    #[arg(long)]
    pub vectors: Option<PathBuf>,
}

/// Parses a non-negative integer, also accepting scientific notation such
/// as `1e9` or `2.5e6` when the value is integral.
pub fn parse_count(s: &str) -> Result<u64, String> {
    let s = s.trim().replace('_', "");
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if !v.is_finite() || v < 0.0 || v.fract() != 0.0 || v >= 2f64.powi(64) {
        return Err(format!("{s:?} is not a non-negative integer"));
    }
    Ok(v as u64)
}

pub fn parse_usize(s: &str) -> Result<usize, String> {
    let v = parse_count(s)?;
    usize::try_from(v).map_err(|_| format!("{s:?} is too large"))
}

fn parse_flag(s: &str) -> Result<BugCompatFlag, String> {
    s.parse().map_err(|e: mirage_core::Error| e.to_string())
}

fn parse_cipher(s: &str) -> Result<BlockCipherKind, String> {
    s.parse().map_err(|e: mirage_core::Error| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_accept_scientific_notation() {
        assert_eq!(parse_count("1e9"), Ok(1_000_000_000));
        assert_eq!(parse_count("2.5e6"), Ok(2_500_000));
        assert_eq!(parse_count("100_000"), Ok(100_000));
        assert_eq!(parse_count("18446744073709551615"), Ok(u64::MAX));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-1").is_err());
        assert!(parse_count("1e30").is_err());
        assert!(parse_count("abc").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}

mod args;

use std::process::ExitCode;

use clap::Parser;
use mirage_core::analysis::experiments::{
    BnbParams, CacheInit, CacheRunParams, Fig6Params, Fig7Params, InitOccupancyParams, KatParams,
    UniformityParams,
};
use mirage_core::analysis::{
    run_experiment, ExperimentParams, ExperimentRegistry, ExperimentSpec, Verdict,
};
use mirage_core::cache::{AddressSource, CacheConfig};
use mirage_core::ciphers::BlockCipherKind;
use mirage_core::{BugCompat, Error, ErrorClass};

use args::{Cli, Command, CommonArgs, InitArg};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_ASSERTION: u8 = 3;
const EXIT_IO: u8 = 4;

/// Lines per MB at 64-byte lines.
const LINES_PER_MB: usize = (1 << 20) / 64;

fn spec(common: &CommonArgs, trials: u32, params: ExperimentParams) -> ExperimentSpec {
    ExperimentSpec {
        seed: common.seed,
        trials,
        threads: common.threads,
        full_scale: common.full_scale,
        bug_compat: BugCompat::from_flags(common.bug_compat.iter().copied()),
        out_dir: common.out_dir.clone(),
        params,
    }
}

fn build_spec(command: &Command) -> ExperimentSpec {
    match command {
        Command::Bnb(a) => spec(
            &a.common,
            a.trials,
            ExperimentParams::Bnb(BnbParams {
                ways: a.ways.clone(),
                buckets_per_skew: a.buckets_per_skew,
                average_load: a.average_load,
                max_throws: a.common.budget(a.throws),
            }),
        ),
        Command::Cache(a) => {
            let g = &a.geometry;
            let config = CacheConfig {
                sets_per_skew: g.sets_per_skew,
                base_ways_per_skew: g.base_ways,
                extra_ways_per_skew: g.extra_ways,
                data_store_capacity: g.capacity(),
                cipher: g.cipher,
                ..CacheConfig::default()
            };
            let init = match a.init {
                InitArg::Empty => CacheInit::Empty,
                InitArg::Valid => CacheInit::Valid(a.init_lines.unwrap_or(g.capacity())),
                InitArg::Bernoulli => CacheInit::Bernoulli(a.probability),
            };
            let source = match a.reuse_probability {
                None => AddressSource::Random,
                Some(p) => AddressSource::RecycledMix {
                    reuse_probability: p,
                    window: a.reuse_window,
                },
            };
            spec(
                &a.common,
                1,
                ExperimentParams::Cache(CacheRunParams {
                    config,
                    init,
                    references: a.references,
                    source,
                    outcome_log: a.outcome_log,
                    snapshot: a.snapshot,
                }),
            )
        }
        Command::Uniformity(a) => {
            let mut ciphers = a.cipher.clone();
            if ciphers.is_empty() {
                ciphers = UniformityParams::default().ciphers;
                if a.common
                    .bug_compat
                    .contains(&mirage_core::BugCompatFlag::BuggyPresent)
                {
                    ciphers.push(BlockCipherKind::BuggyPresent80);
                }
            }
            spec(
                &a.common,
                a.trials,
                ExperimentParams::Uniformity(UniformityParams {
                    ciphers,
                    addresses: a.addresses,
                    num_sets: a.num_sets,
                }),
            )
        }
        Command::InitOccupancy(a) => {
            let g = &a.geometry;
            spec(
                &a.common,
                a.trials,
                ExperimentParams::InitOccupancy(InitOccupancyParams {
                    sets_per_skew: g.sets_per_skew,
                    base_ways_per_skew: g.base_ways,
                    extra_ways_per_skew: g.extra_ways,
                    data_store_capacity: g.capacity(),
                    cipher: g.cipher,
                    probability: a.probability,
                }),
            )
        }
        Command::Fig6(a) => spec(
            &a.common,
            a.trials,
            ExperimentParams::Fig6(Fig6Params {
                ways: a.ways.clone(),
                buckets_per_skew: a.buckets_per_skew,
                average_load: a.average_load,
                max_throws: a.common.budget(a.throws),
            }),
        ),
        Command::Fig7(a) => {
            let flags = BugCompat::from_flags(a.common.bug_compat.iter().copied());
            spec(
                &a.common,
                a.trials,
                ExperimentParams::Fig7(Fig7Params {
                    capacities: a.size_mb.iter().map(|mb| mb * LINES_PER_MB).collect(),
                    references: a.common.budget(a.references),
                    cipher: a.cipher,
                    modes: a.mode.modes(),
                    original: if flags.any() { flags } else { BugCompat::ALL },
                }),
            )
        }
        Command::CiphersKat(a) => spec(
            &a.common,
            1,
            ExperimentParams::CiphersKat(KatParams {
                vectors: a.vectors.clone(),
            }),
        ),
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err.class() {
        ErrorClass::Config | ErrorClass::Usage => EXIT_CONFIG,
        ErrorClass::Assertion => EXIT_ASSERTION,
        ErrorClass::Io => EXIT_IO,
    }
}

fn print_kat(summary: &serde_json::Value) {
    let Some(ciphers) = summary["ciphers"].as_array() else {
        return;
    };
    for c in ciphers {
        let (vectors, passed) = (
            c["vectors"].as_u64().unwrap_or(0),
            c["passed"].as_u64().unwrap_or(0),
        );
        let name = c["cipher"].as_str().unwrap_or("?");
        let status = if vectors == passed { "PASS" } else { "FAIL" };
        let note = if name == "buggy-present80" {
            " (expected to fail)"
        } else {
            ""
        };
        println!("{status} {name}: {passed}/{vectors} vectors{note}");
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let spec = build_spec(&cli.command);

    let registry = ExperimentRegistry::standard();
    let report = match run_experiment(&registry, &spec) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code_for(&e));
        }
    };

    if matches!(cli.command, Command::CiphersKat(_)) {
        print_kat(&report.manifest.summary);
    }
    if spec.bug_compat.any() {
        println!(
            "bug-compat: {}",
            report.manifest.bug_compat.flags.join(", ")
        );
    }
    println!(
        "{}: wrote {} file(s) and manifest.json to {}",
        report.manifest.experiment,
        report.manifest.files.len(),
        report.out_dir.display()
    );
    match report.verdict() {
        Verdict::Ok => ExitCode::SUCCESS,
        Verdict::CapacityViolation(msg) => {
            eprintln!("capacity assertion: {msg}");
            ExitCode::from(EXIT_ASSERTION)
        }
        Verdict::CheckFailed(msg) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(EXIT_CHECK_FAILED)
        }
    }
}

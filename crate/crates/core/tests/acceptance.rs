//! Acceptance suite. Runs every criterion in order, prints one
//! `ACCEPTANCE <n> PASS|FAIL` line each and exits non-zero on any failure.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use mirage_core::analysis::experiments::{
    fig6_experiment, fig7_experiment, init_occupancy_experiment, uniformity_experiment, BnbParams,
    Fig6Params, Fig7Mode, Fig7Params, InitMode, InitOccupancyParams,
};
use mirage_core::analysis::{
    chi_square_statistic, chi_square_upper_critical, run_experiment, ExperimentParams,
    ExperimentRegistry, ExperimentSpec,
};
use mirage_core::bnb::{bnb_fill, bnb_sweep, BnbConfig, BucketState, Throw};
use mirage_core::cache::{CacheConfig, MirageCache, OutcomeKind};
use mirage_core::ciphers::{buggy_present80_encrypt, present80_encrypt, BlockCipherKind};
use mirage_core::rng::rng_from_seed;
use mirage_core::BugCompat;
use rand::Rng;

const PRESENT_EXPECTED: u64 = 0xA112_FFC7_2F68_417B;
const BUGGY_PRESENT_EXPECTED: u64 = 0x036A_8AB1_475E_2D43;

const UNIFORM_ADDRESSES: u64 = 1_000_000;
const UNIFORM_SETS: usize = 16_384;
const UNIFORM_SIGMA: (f64, f64) = (7.0, 9.0);
const UNIFORM_MAX: u32 = 108;
const SKEWED_MIN_SIGMA: f64 = 20.0;
const SKEWED_MIN_MAX: u32 = 150;

const STEADY_WAYS: u32 = 14;
const STEADY_THROWS: u64 = 100_000_000;
const STEADY_SEEDS: u32 = 5;

const TREND_WAYS: [u32; 4] = [9, 10, 11, 12];
const TREND_TRIALS: u32 = 30;
const TREND_MIN_R2: f64 = 0.9;

const SPILL_WINDOW: (u64, u64) = (300_000, 500_000);

const INIT_SEEDS: u32 = 100;
const INIT_FULL_SETS: (f64, f64) = (1.5, 2.5);

const SAE_CAPACITIES: [usize; 3] = [16_384, 32_768, 65_536];
const SAE_REFERENCES: u64 = 100_000_000;

const SEED: u64 = 0;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);
type Property = (&'static str, fn() -> Result<(), String>);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn cipher_known_answer() -> Check {
    let key = [0u8; 10];
    let correct = present80_encrypt(&key, u64::MAX);
    let flags = BugCompat {
        buggy_present: true,
        ..BugCompat::NONE
    };
    let buggy = buggy_present80_encrypt(&flags, &key, u64::MAX).map_err(|e| e.to_string())?;
    ensure(
        correct == PRESENT_EXPECTED && buggy == BUGGY_PRESENT_EXPECTED,
        format!(
            "present80 {correct:#018x} (want {PRESENT_EXPECTED:#018x}), \
             buggy {buggy:#018x} (want {BUGGY_PRESENT_EXPECTED:#018x})"
        ),
    )
}

fn uniformity() -> Check {
    let flags = BugCompat {
        buggy_present: true,
        ..BugCompat::NONE
    };
    let mut ok = true;
    let mut detail = Vec::new();
    for kind in [
        BlockCipherKind::Aes128,
        BlockCipherKind::Prince64,
        BlockCipherKind::BuggyPresent80,
    ] {
        let r = uniformity_experiment(kind, UNIFORM_ADDRESSES, UNIFORM_SETS, SEED, &flags)
            .map_err(|e| e.to_string())?;
        let (sigma, max) = (r.stats.stddev, r.stats.max);
        ok &= if kind == BlockCipherKind::BuggyPresent80 {
            sigma >= SKEWED_MIN_SIGMA && max >= SKEWED_MIN_MAX
        } else {
            (UNIFORM_SIGMA.0..=UNIFORM_SIGMA.1).contains(&sigma) && max <= UNIFORM_MAX
        };
        detail.push(format!("{} sigma {sigma:.2} max {max}", kind.name()));
    }
    ensure(ok, detail.join(", "))
}

fn steady_state_no_spill() -> Check {
    let template = BnbConfig {
        capacity_per_bucket: STEADY_WAYS,
        max_throws: STEADY_THROWS,
        remove_ball_enabled: true,
        rng_seed: SEED,
        ..BnbConfig::default()
    };
    let table = bnb_sweep([STEADY_WAYS], STEADY_SEEDS, &template).map_err(|e| e.to_string())?;
    let spills = table.rows.iter().filter(|r| r.result.spilled).count();
    let violations = table
        .rows
        .iter()
        .filter(|r| r.result.capacity_violation)
        .count();
    let complete = table
        .rows
        .iter()
        .all(|r| r.result.throws_before_spill == template.total_balls() + STEADY_THROWS);
    ensure(
        table.rows.len() == STEADY_SEEDS as usize && spills == 0 && violations == 0 && complete,
        format!(
            "W={STEADY_WAYS}, {} seeds x {STEADY_THROWS} throws: {spills} spills, {violations} capacity violations",
            table.rows.len()
        ),
    )
}

fn spill_trend() -> Check {
    let params = Fig6Params {
        ways: TREND_WAYS.to_vec(),
        max_throws: STEADY_THROWS,
        ..Fig6Params::default()
    };
    let r = fig6_experiment(&params, TREND_TRIALS, SEED).map_err(|e| e.to_string())?;
    let medians: Vec<f64> = r.correct.points.iter().map(|p| p.median_throws).collect();
    let increasing = medians.windows(2).all(|w| w[1] > w[0]);
    let accelerating = r.correct_ratios.len() == TREND_WAYS.len() - 1
        && r.correct_ratios.windows(2).all(|w| w[1] > w[0]);
    let r2 = r.bug_compat_fit.map_or(f64::NAN, |f| f.r_squared);
    ensure(
        increasing && accelerating && r2 >= TREND_MIN_R2,
        format!(
            "correct medians {medians:?}, ratios {:?}, no-removal R^2 {r2:.4}",
            r.correct_ratios
                .iter()
                .map(|x| format!("{x:.3}"))
                .collect::<Vec<_>>()
        ),
    )
}

fn spill_without_removal() -> Check {
    let cfg = BnbConfig {
        remove_ball_enabled: false,
        rng_seed: SEED,
        ..BnbConfig::default()
    };
    let r = mirage_core::bnb::bnb_run(&cfg).map_err(|e| e.to_string())?;
    let balls = r.throws_before_spill;
    ensure(
        r.spilled && r.capacity_violation && (SPILL_WINDOW.0..=SPILL_WINDOW.1).contains(&balls),
        format!(
            "violation {}, {balls} balls installed at first spill (capacity {})",
            r.capacity_violation,
            cfg.total_balls()
        ),
    )
}

fn init_occupancy() -> Check {
    let r = init_occupancy_experiment(&InitOccupancyParams::default(), INIT_SEEDS, SEED)
        .map_err(|e| e.to_string())?;
    let correct_full: usize = r
        .trials
        .iter()
        .filter(|t| t.mode == InitMode::Correct)
        .map(|t| t.full_sets)
        .sum();
    let correct_trials = r
        .trials
        .iter()
        .filter(|t| t.mode == InitMode::Correct)
        .count();
    let mean = r.mean_full_sets_buggy;
    ensure(
        (INIT_FULL_SETS.0..=INIT_FULL_SETS.1).contains(&mean)
            && correct_full == 0
            && correct_trials == INIT_SEEDS as usize,
        format!(
            "bernoulli mean full sets {mean:.2} (expected {:.2}), correct init full sets {correct_full} over {correct_trials} seeds",
            r.expected_full_sets_buggy
        ),
    )
}

fn no_sae_in_fixed_mode() -> Check {
    let params = Fig7Params {
        capacities: SAE_CAPACITIES.to_vec(),
        references: SAE_REFERENCES,
        cipher: BlockCipherKind::Aes128,
        modes: vec![Fig7Mode::Fixed],
        ..Fig7Params::default()
    };
    let rows = fig7_experiment(&params, 1, SEED).map_err(|e| e.to_string())?;
    let saes: u64 = rows.iter().map(|r| r.sae_count).sum();
    let complete = rows
        .iter()
        .all(|r| r.references == SAE_REFERENCES && !r.capacity_violation);
    ensure(
        rows.len() == SAE_CAPACITIES.len() && saes == 0 && complete,
        format!(
            "aes128, {SAE_REFERENCES} references at {:?} lines: {saes} set-associative evictions",
            SAE_CAPACITIES
        ),
    )
}

fn bijection_trace() -> Result<(), String> {
    let mut cache = MirageCache::new(CacheConfig {
        sets_per_skew: 8,
        base_ways_per_skew: 2,
        extra_ways_per_skew: 2,
        data_store_capacity: 32,
        cipher: BlockCipherKind::Aes128,
        bug_compat: BugCompat::NONE,
        rng_seed: SEED,
    })
    .map_err(|e| e.to_string())?;
    let mut rng = rng_from_seed(SEED);
    let mut recent: Vec<u64> = Vec::new();
    for op in 0..100_000 {
        let result = match rng.random_range(0..10) {
            0..=7 => {
                let a = match recent.len() {
                    n if n > 0 && rng.random_bool(0.25) => recent[rng.random_range(0..n)],
                    _ => rng.random(),
                };
                recent.push(a);
                cache.install(a).map(drop)
            }
            _ if cache.data_occupancy() > 0 => cache.global_evict().map(drop),
            _ => Ok(()),
        };
        result
            .and_then(|()| cache.check_invariants())
            .map_err(|e| format!("op {op}: {e}"))?;
        if recent.len() > 256 {
            recent.drain(..128);
        }
    }
    if cache.outcome_count(OutcomeKind::SetAssociativeEviction) == 0 {
        return Err("trace never reached a set-associative eviction".into());
    }
    Ok(())
}

fn bnb_conservation() -> Result<(), String> {
    for seed in 0..8 {
        let cfg = BnbConfig {
            buckets_per_skew: 64,
            capacity_per_bucket: 10 + (seed as u32 % 4),
            rng_seed: seed,
            ..BnbConfig::default()
        };
        let mut rng = rng_from_seed(seed);
        let fill = bnb_fill(&cfg, &mut rng);
        if fill.spill_at.is_some() {
            continue;
        }
        let mut state = fill.state;
        for _ in 0..20_000 {
            let throw = state.remove_then_throw(&mut rng);
            let sum: u64 = state.occupancy().iter().map(|&c| u64::from(c)).sum();
            if sum != cfg.total_balls() || state.max_occupancy() > cfg.capacity_per_bucket {
                return Err(format!(
                    "seed {seed}: {sum} balls, max {}",
                    state.max_occupancy()
                ));
            }
            if throw == Throw::Spill {
                break;
            }
        }
    }
    Ok(())
}

fn csv_rerun() -> Result<(), String> {
    let root = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let registry = ExperimentRegistry::standard();
    let params = BnbParams {
        ways: vec![10, 12, 14],
        buckets_per_skew: 512,
        max_throws: 50_000,
        ..BnbParams::default()
    };
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let dir = root.join(run);
        let _ = fs::remove_dir_all(&dir);
        let mut spec = ExperimentSpec::new(ExperimentParams::Bnb(params.clone()), &dir);
        spec.trials = 4;
        spec.seed = 17;
        run_experiment(&registry, &spec).map_err(|e| e.to_string())?;
        let files = ["bnb.csv", "bnb_points.csv"].map(|f| fs::read(dir.join(f)));
        outputs.push(
            files
                .into_iter()
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?,
        );
    }
    if outputs[0] != outputs[1] {
        return Err("CSV outputs differ between reruns".into());
    }
    Ok(())
}

fn removal_chi_square() -> Result<(), String> {
    let counts: Vec<u32> = (0..64).map(|b| 1 + (b % 14)).collect();
    let total: u32 = counts.iter().sum();
    let state = BucketState::from_counts(32, 14, counts.clone());
    let mut rng = rng_from_seed(SEED);
    let n = 1_000_000u64;
    let mut observed = vec![0u64; counts.len()];
    for _ in 0..n {
        observed[state.sample_removal(&mut rng).ok_or("empty state")?] += 1;
    }
    let expected: Vec<f64> = counts
        .iter()
        .map(|&c| n as f64 * f64::from(c) / f64::from(total))
        .collect();
    let chi2 = chi_square_statistic(&observed, &expected);
    let critical = chi_square_upper_critical(counts.len() - 1, 3.0);
    if chi2 >= critical {
        return Err(format!("chi2 {chi2:.1} >= {critical:.1}"));
    }
    Ok(())
}

fn property_suites() -> Check {
    let checks: [Property; 4] = [
        ("pointer bijection", bijection_trace),
        ("bnb conservation", bnb_conservation),
        ("csv rerun", csv_rerun),
        ("removal chi-square", removal_chi_square),
    ];
    let mut ok = true;
    let detail: Vec<String> = checks
        .iter()
        .map(|(name, check)| match check() {
            Ok(()) => format!("{name} ok"),
            Err(e) => {
                ok = false;
                format!("{name} FAILED ({e})")
            }
        })
        .collect();
    ensure(ok, detail.join(", "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("cipher known-answer", cipher_known_answer),
        ("index uniformity", uniformity),
        ("steady-state bnb without spills", steady_state_no_spill),
        ("spill trend versus W", spill_trend),
        ("spill without ball removal", spill_without_removal),
        ("initial tag occupancy", init_occupancy),
        ("no set-associative evictions", no_sae_in_fixed_mode),
        ("property suites", property_suites),
    ];
    let mut failed = 0;
    for (n, (name, criterion)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = criterion();
        let secs = start.elapsed().as_secs_f64();
        let (status, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!(
            "ACCEPTANCE {} {status} {name} [{secs:.1}s]: {detail}",
            n + 1
        );
        failed += result.is_err() as usize;
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    csv_row, expect_params, opt, Experiment, ExperimentKind, ExperimentSpec, Outcome, OutputDir,
};
use crate::analysis::{median, LinearFit};
use crate::bugcompat::BugCompat;
use crate::cache::{AddressSource, CacheConfig, MirageCache};
use crate::ciphers::BlockCipherKind;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, point_stream};

/// Lines per MB at 64-byte lines.
const LINES_PER_MB: usize = (1 << 20) / 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fig7Mode {
    /// Correct init, correct cipher, global evictions.
    Fixed,
    /// The requested bug-compat behaviours.
    Original,
}

impl Fig7Mode {
    pub fn name(self) -> &'static str {
        match self {
            Fig7Mode::Fixed => "fixed",
            Fig7Mode::Original => "original",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig7Params {
    /// Data-store capacities in lines; sets per skew scale with them.
    pub capacities: Vec<usize>,
    pub references: u64,
    /// Cipher for the fixed mode, and for the original mode unless the
    /// buggy cipher is requested.
    pub cipher: BlockCipherKind,
    pub modes: Vec<Fig7Mode>,
    /// Behaviours of the original mode.
    pub original: BugCompat,
}

impl Default for Fig7Params {
    fn default() -> Self {
        Fig7Params {
            capacities: [1, 2, 4, 8, 16]
                .iter()
                .map(|mb| mb * LINES_PER_MB)
                .collect(),
            references: 100_000_000,
            cipher: BlockCipherKind::Aes128,
            modes: vec![Fig7Mode::Fixed, Fig7Mode::Original],
            original: BugCompat::ALL,
        }
    }
}

impl Fig7Params {
    pub fn config(&self, mode: Fig7Mode, capacity: usize, seed: u64) -> Result<CacheConfig> {
        let (bug_compat, cipher) = match mode {
            Fig7Mode::Fixed => (BugCompat::NONE, self.cipher),
            Fig7Mode::Original => (
                self.original,
                if self.original.buggy_present {
                    BlockCipherKind::BuggyPresent80
                } else {
                    self.cipher
                },
            ),
        };
        let cfg = CacheConfig {
            cipher,
            bug_compat,
            rng_seed: seed,
            ..CacheConfig::with_capacity_lines(capacity)?
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Fig7Row {
    pub mode: Fig7Mode,
    pub capacity_lines: usize,
    pub sets_per_skew: usize,
    pub trial: u32,
    pub seed: u64,
    /// References completed (the SAE reference included when stopped on it).
    pub references: u64,
    pub sae_count: u64,
    /// References completed before the first SAE, if one occurred.
    pub refs_before_first_sae: Option<u64>,
    pub capacity_violation: bool,
}

fn run_trial(
    params: &Fig7Params,
    mode: Fig7Mode,
    capacity: usize,
    trial: u32,
    base: u64,
) -> Result<Fig7Row> {
    let point = (capacity as u64) << 1 | (mode == Fig7Mode::Original) as u64;
    let seed = derive_seed(base, point_stream(point, u64::from(trial)));
    let cfg = params.config(mode, capacity, seed)?;
    let sets_per_skew = cfg.sets_per_skew;
    let bernoulli = cfg.bug_compat.bernoulli_init;
    let mut cache = MirageCache::new(cfg)?;
    if bernoulli {
        cache.init_buggy_bernoulli(0.5)?;
    } else {
        cache.init_valid(capacity)?;
    }
    let (log, capacity_violation) =
        match cache.run_until_first_sae(params.references, AddressSource::Random) {
            Ok(log) => (log, false),
            Err(aborted) => match aborted.error {
                Error::CapacityAssertion { .. } => (aborted.log, true),
                other => return Err(other),
            },
        };
    Ok(Fig7Row {
        mode,
        capacity_lines: capacity,
        sets_per_skew,
        trial,
        seed,
        references: log.references,
        sae_count: log.sae_count,
        refs_before_first_sae: log.first_sae,
        capacity_violation,
    })
}

/// Runs every (mode, capacity, trial) combination, stopping each run at
/// its first SAE. Rows are ordered by mode, capacity, then trial.
pub fn fig7_experiment(params: &Fig7Params, trials: u32, seed: u64) -> Result<Vec<Fig7Row>> {
    if params.capacities.is_empty() || params.modes.is_empty() {
        return Err(Error::config(
            "fig7 needs at least one capacity and one mode",
        ));
    }
    let mut jobs = Vec::new();
    for &mode in &params.modes {
        for &capacity in &params.capacities {
            params.config(mode, capacity, seed)?;
            jobs.extend((0..trials).map(|t| (mode, capacity, t)));
        }
    }
    let mut rows = jobs
        .par_iter()
        .map(|&(mode, capacity, trial)| run_trial(params, mode, capacity, trial, seed))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| (r.mode, r.capacity_lines, r.trial));
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
struct Fig7Point {
    mode: Fig7Mode,
    capacity_lines: usize,
    trials: usize,
    trials_with_sae: usize,
    capacity_violations: usize,
    total_sae: u64,
    median_refs_before_first_sae: Option<f64>,
    /// Median references completed when the run ended, for whatever reason.
    median_references: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct Fig7Fits {
    /// Original mode: median refs before the first SAE against capacity.
    first_sae: Option<LinearFit>,
    /// Original mode: median references at termination against capacity.
    /// Without global evictions runs usually end on the capacity assertion.
    termination: Option<LinearFit>,
}

fn summarize(rows: &[Fig7Row], params: &Fig7Params) -> (Vec<Fig7Point>, Fig7Fits) {
    let mut points = Vec::new();
    for &mode in &params.modes {
        for &capacity in &params.capacities {
            let group: Vec<&Fig7Row> = rows
                .iter()
                .filter(|r| r.mode == mode && r.capacity_lines == capacity)
                .collect();
            let mut firsts: Vec<u64> = group
                .iter()
                .filter_map(|r| r.refs_before_first_sae)
                .collect();
            let mut ends: Vec<u64> = group.iter().map(|r| r.references).collect();
            points.push(Fig7Point {
                mode,
                capacity_lines: capacity,
                trials: group.len(),
                trials_with_sae: firsts.len(),
                capacity_violations: group.iter().filter(|r| r.capacity_violation).count(),
                total_sae: group.iter().map(|r| r.sae_count).sum(),
                median_refs_before_first_sae: median(&mut firsts),
                median_references: median(&mut ends),
            });
        }
    }
    let fit = |y: fn(&Fig7Point) -> Option<f64>| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = points
            .iter()
            .filter(|p| p.mode == Fig7Mode::Original)
            .filter_map(|p| Some((p.capacity_lines as f64, y(p)?)))
            .unzip();
        LinearFit::fit(&xs, &ys)
    };
    let fits = Fig7Fits {
        first_sae: fit(|p| p.median_refs_before_first_sae),
        termination: fit(|p| p.median_references),
    };
    (points, fits)
}

pub struct Fig7Experiment;

impl Experiment for Fig7Experiment {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::Fig7Sae
    }

    fn description(&self) -> &'static str {
        "cache references before the first set-associative eviction versus cache size"
    }

    fn run(&self, spec: &ExperimentSpec, out: &mut OutputDir) -> Result<Outcome> {
        let params = expect_params!(spec, Fig7);
        let rows = fig7_experiment(params, spec.trials, spec.seed)?;
        out.write_csv(
            "fig7.csv",
            &[
                "mode",
                "cache_size_lines",
                "sets_per_skew",
                "trial",
                "seed",
                "references",
                "sae_count",
                "refs_before_first_sae",
                "capacity_violation",
            ],
            rows.iter().map(|r| {
                csv_row(&[
                    &r.mode.name(),
                    &r.capacity_lines,
                    &r.sets_per_skew,
                    &r.trial,
                    &r.seed,
                    &r.references,
                    &r.sae_count,
                    &opt(r.refs_before_first_sae),
                    &r.capacity_violation,
                ])
            }),
        )?;
        let (points, fits) = summarize(&rows, params);
        Outcome::ok(serde_json::json!({
            "reference_budget": params.references,
            "original_flags": params.original.flags().iter().map(|f| f.name()).collect::<Vec<_>>(),
            "points": points,
            "original_fits": fits,
        }))
    }
}

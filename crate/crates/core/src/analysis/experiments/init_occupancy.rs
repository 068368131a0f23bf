use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    csv_row, expect_params, Experiment, ExperimentKind, ExperimentSpec, Outcome, OutputDir,
};
use crate::analysis::OccupancyStats;
use crate::bugcompat::BugCompat;
use crate::cache::{CacheConfig, MirageCache};
use crate::ciphers::BlockCipherKind;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, point_stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    /// Every tag valid independently with the configured probability.
    BuggyBernoulli,
    /// `data_store_capacity` random addresses through the install path.
    Correct,
}

impl InitMode {
    pub fn name(self) -> &'static str {
        match self {
            InitMode::BuggyBernoulli => "buggy-bernoulli",
            InitMode::Correct => "correct",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitOccupancyParams {
    pub sets_per_skew: usize,
    pub base_ways_per_skew: usize,
    pub extra_ways_per_skew: usize,
    pub data_store_capacity: usize,
    pub cipher: BlockCipherKind,
    pub probability: f64,
}

impl Default for InitOccupancyParams {
    fn default() -> Self {
        let d = CacheConfig::default();
        InitOccupancyParams {
            sets_per_skew: d.sets_per_skew,
            base_ways_per_skew: d.base_ways_per_skew,
            extra_ways_per_skew: d.extra_ways_per_skew,
            data_store_capacity: d.data_store_capacity,
            cipher: d.cipher,
            probability: 0.5,
        }
    }
}

impl InitOccupancyParams {
    fn config(&self, mode: InitMode, seed: u64) -> CacheConfig {
        CacheConfig {
            sets_per_skew: self.sets_per_skew,
            base_ways_per_skew: self.base_ways_per_skew,
            extra_ways_per_skew: self.extra_ways_per_skew,
            data_store_capacity: self.data_store_capacity,
            cipher: self.cipher,
            bug_compat: match mode {
                InitMode::BuggyBernoulli => BugCompat {
                    bernoulli_init: true,
                    ..BugCompat::NONE
                },
                InitMode::Correct => BugCompat::NONE,
            },
            rng_seed: seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitTrial {
    pub mode: InitMode,
    pub trial: u32,
    pub seed: u64,
    pub full_sets: usize,
    pub valid_tags: usize,
    pub max_occupancy: u32,
    /// Per-set valid counts, skew 0 then skew 1. Kept for trial 0 only.
    #[serde(skip)]
    pub histogram: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InitOccupancyResult {
    pub trials: Vec<InitTrial>,
    pub mean_full_sets_buggy: f64,
    pub mean_full_sets_correct: f64,
    /// Expected full sets under Bernoulli init: sets * p^ways.
    pub expected_full_sets_buggy: f64,
}

fn run_trial(
    params: &InitOccupancyParams,
    mode: InitMode,
    trial: u32,
    base: u64,
) -> Result<InitTrial> {
    let seed = derive_seed(base, point_stream(mode as u64, u64::from(trial)));
    let mut cache = MirageCache::new(params.config(mode, seed))?;
    match mode {
        InitMode::BuggyBernoulli => cache.init_buggy_bernoulli(params.probability)?,
        InitMode::Correct => cache.init_valid(params.data_store_capacity)?,
    }
    let hist = cache.occupancy_histogram();
    let stats = OccupancyStats::from_counts(&hist);
    Ok(InitTrial {
        mode,
        trial,
        seed,
        full_sets: cache.full_sets(),
        valid_tags: cache.valid_tags(),
        max_occupancy: stats.max,
        histogram: (trial == 0).then_some(hist),
    })
}

/// Builds both initializations `trials` times each.
pub fn init_occupancy_experiment(
    params: &InitOccupancyParams,
    trials: u32,
    seed: u64,
) -> Result<InitOccupancyResult> {
    if !(0.0..=1.0).contains(&params.probability) {
        return Err(Error::InvalidProbability(params.probability));
    }
    params.config(InitMode::Correct, seed).validate()?;
    let jobs: Vec<(InitMode, u32)> = [InitMode::BuggyBernoulli, InitMode::Correct]
        .into_iter()
        .flat_map(|m| (0..trials).map(move |t| (m, t)))
        .collect();
    let trials_out = jobs
        .par_iter()
        .map(|&(mode, trial)| run_trial(params, mode, trial, seed))
        .collect::<Result<Vec<_>>>()?;
    let mean = |mode| {
        let v: Vec<f64> = trials_out
            .iter()
            .filter(|t| t.mode == mode)
            .map(|t| t.full_sets as f64)
            .collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    };
    let ways = (params.base_ways_per_skew + params.extra_ways_per_skew) as i32;
    Ok(InitOccupancyResult {
        mean_full_sets_buggy: mean(InitMode::BuggyBernoulli),
        mean_full_sets_correct: mean(InitMode::Correct),
        expected_full_sets_buggy: (2 * params.sets_per_skew) as f64 * params.probability.powi(ways),
        trials: trials_out,
    })
}

pub struct InitOccupancyExperiment;

impl Experiment for InitOccupancyExperiment {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::InitOccupancy
    }

    fn description(&self) -> &'static str {
        "per-set tag occupancy after Bernoulli and install-path initialization"
    }

    fn run(&self, spec: &ExperimentSpec, out: &mut OutputDir) -> Result<Outcome> {
        let params = expect_params!(spec, InitOccupancy);
        let result = init_occupancy_experiment(params, spec.trials, spec.seed)?;
        let sets = params.sets_per_skew;
        out.write_csv(
            "init_occupancy_hist.csv",
            &["mode", "set_index", "skew", "valid_count"],
            result
                .trials
                .iter()
                .filter_map(|t| t.histogram.as_ref().map(|h| (t.mode, h)))
                .flat_map(|(mode, hist)| {
                    hist.iter()
                        .enumerate()
                        .map(move |(i, v)| csv_row(&[&mode.name(), &(i % sets), &(i / sets), v]))
                }),
        )?;
        out.write_csv(
            "init_occupancy_full_sets.csv",
            &[
                "mode",
                "trial",
                "seed",
                "full_sets",
                "valid_tags",
                "max_occupancy",
            ],
            result.trials.iter().map(|t| {
                csv_row(&[
                    &t.mode.name(),
                    &t.trial,
                    &t.seed,
                    &t.full_sets,
                    &t.valid_tags,
                    &t.max_occupancy,
                ])
            }),
        )?;
        Outcome::ok(serde_json::json!({
            "mean_full_sets_buggy": result.mean_full_sets_buggy,
            "expected_full_sets_buggy": result.expected_full_sets_buggy,
            "mean_full_sets_correct": result.mean_full_sets_correct,
            "max_occupancy_correct": result.trials.iter()
                .filter(|t| t.mode == InitMode::Correct)
                .map(|t| t.max_occupancy).max(),
        }))
    }
}

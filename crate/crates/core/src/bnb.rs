//! Buckets-and-balls model of the MIRAGE tag store.
//!
//! Two skews of `buckets_per_skew` buckets each hold balls (resident lines).
//! A throw picks one uniformly random bucket per skew and places the ball in
//! the less occupied one, breaking ties uniformly. In the correct model every
//! steady-state throw is preceded by the removal of one uniformly random ball
//! (a global eviction); the bug-compat model never removes.
//!
//! A spill is a throw whose chosen bucket already holds `capacity_per_bucket`
//! balls, i.e. both candidates are full.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, point_stream, rng_from_seed, SimRng};

pub const NUM_SKEWS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BnbConfig {
    pub buckets_per_skew: usize,
    /// Ways per bucket (W).
    pub capacity_per_bucket: u32,
    pub average_load: u32,
    /// Steady-state throw budget after the fill phase.
    pub max_throws: u64,
    pub remove_ball_enabled: bool,
    pub rng_seed: u64,
}

impl Default for BnbConfig {
    fn default() -> Self {
        BnbConfig {
            buckets_per_skew: 16384,
            capacity_per_bucket: 14,
            average_load: 8,
            max_throws: 100_000_000,
            remove_ball_enabled: true,
            rng_seed: 0,
        }
    }
}

impl BnbConfig {
    pub fn num_buckets(&self) -> usize {
        self.buckets_per_skew * NUM_SKEWS
    }

    /// Balls resident at steady state; equals the modeled data-store capacity.
    pub fn total_balls(&self) -> u64 {
        self.num_buckets() as u64 * u64::from(self.average_load)
    }

    pub fn validate(&self) -> Result<()> {
        if self.buckets_per_skew == 0 {
            return Err(Error::config("buckets_per_skew must be positive"));
        }
        if self.average_load == 0 {
            return Err(Error::config("average_load must be positive"));
        }
        if self.capacity_per_bucket < self.average_load {
            return Err(Error::config(format!(
                "capacity per bucket ({}) below average load ({})",
                self.capacity_per_bucket, self.average_load
            )));
        }
        if self.total_balls() > u64::from(u32::MAX) {
            return Err(Error::config("model too large"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpillResult {
    pub spilled: bool,
    /// Throws completed before the spilling throw, fill phase included.
    /// Equals the throws performed when no spill occurred.
    pub throws_before_spill: u64,
    pub balls_in_model_at_end: u64,
    /// Balls exceeded the modeled capacity (bug-compat only).
    pub capacity_violation: bool,
    pub spilled_during_fill: bool,
}

/// Occupancy of every bucket, plus the bucket of every resident ball when
/// removals are modeled.
#[derive(Debug, Clone)]
pub struct BucketState {
    buckets_per_skew: usize,
    capacity: u32,
    counts: Vec<u32>,
    /// `balls[i]` is the bucket holding ball slot `i`. Empty when removals
    /// are not tracked.
    balls: Vec<u32>,
    track_balls: bool,
    total: u64,
}

/// What a single throw did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Throw {
    Placed(usize),
    Spill,
}

impl BucketState {
    pub fn new(buckets_per_skew: usize, capacity: u32, track_balls: bool) -> Self {
        BucketState {
            buckets_per_skew,
            capacity,
            counts: vec![0; buckets_per_skew * NUM_SKEWS],
            balls: Vec::new(),
            track_balls,
            total: 0,
        }
    }

    /// Builds a state from explicit per-bucket counts (skew 0 first).
    pub fn from_counts(buckets_per_skew: usize, capacity: u32, counts: Vec<u32>) -> Self {
        assert_eq!(counts.len(), buckets_per_skew * NUM_SKEWS);
        let balls: Vec<u32> = counts
            .iter()
            .enumerate()
            .flat_map(|(b, &c)| std::iter::repeat_n(b as u32, c as usize))
            .collect();
        BucketState {
            buckets_per_skew,
            capacity,
            total: balls.len() as u64,
            counts,
            balls,
            track_balls: true,
        }
    }

    pub fn occupancy(&self) -> &[u32] {
        &self.counts
    }

    pub fn total_balls(&self) -> u64 {
        self.total
    }

    pub fn max_occupancy(&self) -> u32 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    #[inline]
    fn choose(&self, rng: &mut SimRng) -> usize {
        let n = self.buckets_per_skew;
        let b0 = rng.random_range(0..n);
        let b1 = n + rng.random_range(0..n);
        let (c0, c1) = (self.counts[b0], self.counts[b1]);
        if c0 < c1 || (c0 == c1 && rng.random::<bool>()) {
            b0
        } else {
            b1
        }
    }

    /// Places one ball by power-of-two-choices. Nothing changes on a spill.
    #[inline]
    pub fn throw(&mut self, rng: &mut SimRng) -> Throw {
        let bucket = self.choose(rng);
        if self.counts[bucket] >= self.capacity {
            return Throw::Spill;
        }
        self.counts[bucket] += 1;
        self.total += 1;
        if self.track_balls {
            self.balls.push(bucket as u32);
        }
        Throw::Placed(bucket)
    }

    /// Samples the bucket of a uniformly random ball without removing it.
    pub fn sample_removal(&self, rng: &mut SimRng) -> Option<usize> {
        if self.balls.is_empty() {
            return None;
        }
        Some(self.balls[rng.random_range(0..self.balls.len())] as usize)
    }

    /// One steady-state step: remove a uniformly random ball, then throw.
    /// On a spill the removed ball is put back, leaving the state unchanged.
    #[inline]
    pub fn remove_then_throw(&mut self, rng: &mut SimRng) -> Throw {
        debug_assert!(self.track_balls && !self.balls.is_empty());
        let slot = rng.random_range(0..self.balls.len());
        let removed = self.balls[slot] as usize;
        self.counts[removed] -= 1;
        let bucket = self.choose(rng);
        if self.counts[bucket] >= self.capacity {
            self.counts[removed] += 1;
            return Throw::Spill;
        }
        self.counts[bucket] += 1;
        self.balls[slot] = bucket as u32;
        Throw::Placed(bucket)
    }
}

pub struct FillOutcome {
    pub state: BucketState,
    /// Throws completed before a spill during fill, if one occurred.
    pub spill_at: Option<u64>,
}

/// Inserts `total_balls` balls without removals. Stops at the first spill.
pub fn bnb_fill(config: &BnbConfig, rng: &mut SimRng) -> FillOutcome {
    let mut state = BucketState::new(
        config.buckets_per_skew,
        config.capacity_per_bucket,
        config.remove_ball_enabled,
    );
    if config.remove_ball_enabled {
        state.balls.reserve_exact(config.total_balls() as usize);
    }
    for done in 0..config.total_balls() {
        if state.throw(rng) == Throw::Spill {
            return FillOutcome {
                state,
                spill_at: Some(done),
            };
        }
    }
    FillOutcome {
        state,
        spill_at: None,
    }
}

fn run_from(config: &BnbConfig, rng: &mut SimRng) -> (SpillResult, BucketState) {
    let fill = bnb_fill(config, rng);
    let mut state = fill.state;
    let capacity = config.total_balls();
    if let Some(at) = fill.spill_at {
        let result = SpillResult {
            spilled: true,
            throws_before_spill: at,
            balls_in_model_at_end: state.total_balls(),
            capacity_violation: false,
            spilled_during_fill: true,
        };
        return (result, state);
    }

    let mut throws = 0u64;
    let mut spilled = false;
    if config.remove_ball_enabled {
        while throws < config.max_throws {
            if state.remove_then_throw(rng) == Throw::Spill {
                spilled = true;
                break;
            }
            throws += 1;
        }
        assert_eq!(state.total_balls(), capacity, "ball count drifted");
    } else {
        while throws < config.max_throws {
            if state.throw(rng) == Throw::Spill {
                spilled = true;
                break;
            }
            throws += 1;
        }
    }

    let result = SpillResult {
        spilled,
        throws_before_spill: capacity + throws,
        balls_in_model_at_end: state.total_balls(),
        capacity_violation: state.total_balls() > capacity,
        spilled_during_fill: false,
    };
    (result, state)
}

pub fn bnb_run(config: &BnbConfig) -> Result<SpillResult> {
    config.validate()?;
    let mut rng = rng_from_seed(config.rng_seed);
    Ok(run_from(config, &mut rng).0)
}

/// Like [`bnb_run`] but also returns the final bucket state.
pub fn bnb_run_with_state(config: &BnbConfig) -> Result<(SpillResult, BucketState)> {
    config.validate()?;
    let mut rng = rng_from_seed(config.rng_seed);
    Ok(run_from(config, &mut rng))
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub ways: u32,
    pub trial: u32,
    pub seed: u64,
    pub result: SpillResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub ways: u32,
    pub trials: u32,
    pub spilled_trials: u32,
    /// Median of `throws_before_spill`; unspilled trials count at the budget.
    pub median_throws: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub points: Vec<SweepPoint>,
}

/// Runs `trials` independent trials for every W in `ways`. Trial seeds are
/// derived from the template seed, the way count and the trial index.
pub fn bnb_sweep(
    ways: impl IntoIterator<Item = u32>,
    trials: u32,
    template: &BnbConfig,
) -> Result<SweepTable> {
    let ways: Vec<u32> = ways.into_iter().collect();
    for &w in &ways {
        if w <= template.average_load {
            return Err(Error::config(format!(
                "swept ways must exceed the average load ({}), got {w}",
                template.average_load
            )));
        }
        BnbConfig {
            capacity_per_bucket: w,
            ..template.clone()
        }
        .validate()?;
    }
    let jobs: Vec<(u32, u32)> = ways
        .iter()
        .flat_map(|&w| (0..trials).map(move |t| (w, t)))
        .collect();
    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(w, trial)| {
            let seed = derive_seed(
                template.rng_seed,
                point_stream(u64::from(w), u64::from(trial)),
            );
            let cfg = BnbConfig {
                capacity_per_bucket: w,
                rng_seed: seed,
                ..template.clone()
            };
            let result = bnb_run(&cfg).expect("validated above");
            SweepRow {
                ways: w,
                trial,
                seed,
                result,
            }
        })
        .collect();

    let points = ways
        .iter()
        .map(|&w| {
            let mut samples: Vec<u64> = rows
                .iter()
                .filter(|r| r.ways == w)
                .map(|r| r.result.throws_before_spill)
                .collect();
            let spilled_trials = rows
                .iter()
                .filter(|r| r.ways == w && r.result.spilled)
                .count() as u32;
            SweepPoint {
                ways: w,
                trials,
                spilled_trials,
                median_throws: crate::analysis::median(&mut samples).unwrap_or(f64::NAN),
            }
        })
        .collect();
    Ok(SweepTable { rows, points })
}

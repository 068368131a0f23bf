use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    csv_row, expect_params, Experiment, ExperimentKind, ExperimentSpec, Outcome, OutputDir,
};
use crate::analysis::{histogram, poisson_expectation, OccupancyStats, PoissonExpectation};
use crate::bugcompat::BugCompat;
use crate::ciphers::{BlockCipherKind, IndexDerivation};
use crate::error::Result;
use crate::rng::{derive_seed, point_stream, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformityParams {
    pub ciphers: Vec<BlockCipherKind>,
    pub addresses: u64,
    pub num_sets: usize,
}

impl Default for UniformityParams {
    fn default() -> Self {
        UniformityParams {
            ciphers: vec![
                BlockCipherKind::Aes128,
                BlockCipherKind::Prince64,
                BlockCipherKind::Present80,
            ],
            addresses: 1_000_000,
            num_sets: 16384,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformityResult {
    pub cipher: BlockCipherKind,
    pub stats: OccupancyStats,
    pub poisson: PoissonExpectation,
    #[serde(skip)]
    pub histogram: Vec<u32>,
}

/// Maps `n` uniformly random line addresses to sets of one skew under a
/// random key and summarizes the per-set counts.
pub fn uniformity_experiment(
    cipher: BlockCipherKind,
    n: u64,
    num_sets: usize,
    seed: u64,
    bug_compat: &BugCompat,
) -> Result<UniformityResult> {
    let mut rng = rng_from_seed(seed);
    let index = IndexDerivation::random(cipher, num_sets, &mut rng, bug_compat)?;
    let hist = histogram(
        (0..n).map(|_| {
            index
                .derive_set_index(0, rng.random())
                .expect("skew 0 exists")
        }),
        num_sets,
    );
    Ok(UniformityResult {
        cipher,
        stats: OccupancyStats::from_counts(&hist),
        poisson: poisson_expectation(n, num_sets as u64)?,
        histogram: hist,
    })
}

pub struct UniformityExperiment;

impl Experiment for UniformityExperiment {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::IndexUniformity
    }

    fn description(&self) -> &'static str {
        "set-index distribution of random addresses under each cipher"
    }

    fn run(&self, spec: &ExperimentSpec, out: &mut OutputDir) -> Result<Outcome> {
        let params = expect_params!(spec, Uniformity);
        let jobs: Vec<(BlockCipherKind, u32)> = params
            .ciphers
            .iter()
            .flat_map(|&c| (0..spec.trials).map(move |t| (c, t)))
            .collect();
        let results = jobs
            .par_iter()
            .map(|&(cipher, trial)| {
                let seed = derive_seed(spec.seed, point_stream(cipher as u64, u64::from(trial)));
                let r = uniformity_experiment(
                    cipher,
                    params.addresses,
                    params.num_sets,
                    seed,
                    &spec.bug_compat,
                )?;
                Ok((trial, seed, r))
            })
            .collect::<Result<Vec<_>>>()?;

        out.write_csv(
            "uniformity_hist.csv",
            &["cipher", "trial", "set_index", "count"],
            results.iter().flat_map(|(trial, _, r)| {
                r.histogram
                    .iter()
                    .enumerate()
                    .map(move |(i, c)| csv_row(&[&r.cipher.name(), trial, &i, c]))
            }),
        )?;
        out.write_csv(
            "uniformity_stats.csv",
            &[
                "cipher",
                "trial",
                "seed",
                "addresses",
                "num_sets",
                "mean",
                "stddev",
                "max",
                "exceedance_count",
                "poisson_mu",
                "poisson_sigma",
                "six_sigma_bound",
            ],
            results.iter().map(|(trial, seed, r)| {
                csv_row(&[
                    &r.cipher.name(),
                    trial,
                    seed,
                    &params.addresses,
                    &params.num_sets,
                    &r.stats.mean,
                    &r.stats.stddev,
                    &r.stats.max,
                    &r.stats.exceedance_count,
                    &r.poisson.mu,
                    &r.poisson.sigma,
                    &r.poisson.six_sigma_bound,
                ])
            }),
        )?;
        let summary: Vec<_> = results
            .iter()
            .map(
                |(trial, seed, r)| serde_json::json!({ "trial": trial, "seed": seed, "result": r }),
            )
            .collect();
        Outcome::ok(summary)
    }
}

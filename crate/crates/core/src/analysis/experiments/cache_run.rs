use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use super::{
    csv_row, expect_params, Experiment, ExperimentKind, ExperimentSpec, Outcome, OutputDir, Verdict,
};
use crate::cache::{AddressSource, CacheConfig, MirageCache};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CacheInit {
    Empty,
    /// Install this many random addresses before the measured references.
    Valid(usize),
    /// Bernoulli tag init with this probability (bug-compat).
    Bernoulli(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRunParams {
    /// Geometry and cipher; seed and bug-compat flags come from the spec.
    pub config: CacheConfig,
    pub init: CacheInit,
    pub references: u64,
    pub source: AddressSource,
    /// Write one CSV row per reference.
    pub outcome_log: bool,
    pub snapshot: bool,
}

impl Default for CacheRunParams {
    fn default() -> Self {
        let config = CacheConfig::default();
        CacheRunParams {
            init: CacheInit::Valid(config.data_store_capacity),
            config,
            references: 1_000_000,
            source: AddressSource::Random,
            outcome_log: false,
            snapshot: false,
        }
    }
}

pub struct CacheExperiment;

impl Experiment for CacheExperiment {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::Cache
    }

    fn description(&self) -> &'static str {
        "single cache instance: initialize, run references, log outcomes"
    }

    fn run(&self, spec: &ExperimentSpec, out: &mut OutputDir) -> Result<Outcome> {
        let params = expect_params!(spec, Cache);
        let config = CacheConfig {
            bug_compat: spec.bug_compat,
            rng_seed: spec.seed,
            ..params.config.clone()
        };
        let mut cache = MirageCache::new(config)?;
        match params.init {
            CacheInit::Empty => {}
            CacheInit::Valid(k) => cache.init_valid(k)?,
            CacheInit::Bernoulli(p) => cache.init_buggy_bernoulli(p)?,
        }
        let init_histogram = cache.occupancy_histogram();

        let mut log_rows = Vec::new();
        let result = cache.run_references_with(params.references, params.source, |i, o, sae| {
            if params.outcome_log {
                log_rows.push(csv_row(&[&i, &o.kind.name(), &sae]));
            }
            ControlFlow::Continue(())
        });
        let (log, verdict) = match result {
            Ok(log) => (log, Verdict::Ok),
            Err(aborted) => match aborted.error {
                Error::CapacityAssertion { .. } => {
                    let msg = aborted.error.to_string();
                    (aborted.log, Verdict::CapacityViolation(msg))
                }
                other => return Err(other),
            },
        };

        if params.outcome_log {
            out.write_csv(
                "outcomes.csv",
                &["reference_index", "outcome_kind", "sae_cumulative"],
                log_rows,
            )?;
        }
        let sets = cache.config().sets_per_skew;
        let occupancy_rows = |phase: &'static str, hist: Vec<u32>| {
            hist.into_iter()
                .enumerate()
                .map(move |(i, v)| csv_row(&[&phase, &(i % sets), &(i / sets), &v]))
        };
        out.write_csv(
            "occupancy.csv",
            &["phase", "set_index", "skew", "valid_count"],
            occupancy_rows("init", init_histogram)
                .chain(occupancy_rows("final", cache.occupancy_histogram())),
        )?;
        if params.snapshot {
            out.write_json("snapshot.json", &cache.snapshot())?;
        }
        Ok(Outcome {
            summary: serde_json::json!({
                "log": log,
                "data_occupancy": cache.data_occupancy(),
                "valid_tags": cache.valid_tags(),
                "unlinked_tags": cache.unlinked_tags(),
                "full_sets": cache.full_sets(),
            }),
            verdict,
        })
    }
}

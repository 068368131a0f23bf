use serde::{Deserialize, Serialize};

use super::{
    csv_row, expect_params, Experiment, ExperimentKind, ExperimentSpec, Outcome, OutputDir, Verdict,
};
use crate::bnb::{bnb_sweep, BnbConfig, SweepTable};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnbParams {
    pub ways: Vec<u32>,
    pub buckets_per_skew: usize,
    pub average_load: u32,
    pub max_throws: u64,
}

impl Default for BnbParams {
    fn default() -> Self {
        let d = BnbConfig::default();
        BnbParams {
            ways: vec![d.capacity_per_bucket],
            buckets_per_skew: d.buckets_per_skew,
            average_load: d.average_load,
            max_throws: d.max_throws,
        }
    }
}

impl BnbParams {
    /// Template config; the no-global-evict flag disables ball removal.
    pub fn template(&self, spec: &ExperimentSpec) -> BnbConfig {
        BnbConfig {
            buckets_per_skew: self.buckets_per_skew,
            capacity_per_bucket: self.ways.first().copied().unwrap_or(14),
            average_load: self.average_load,
            max_throws: self.max_throws,
            remove_ball_enabled: !spec.bug_compat.no_global_evict,
            rng_seed: spec.seed,
        }
    }
}

pub(crate) const SWEEP_COLUMNS: [&str; 6] = [
    "ways",
    "trial",
    "seed",
    "spilled",
    "throws_before_spill",
    "capacity_violation",
];

pub(crate) fn sweep_rows(table: &SweepTable) -> impl Iterator<Item = Vec<String>> + '_ {
    table.rows.iter().map(|r| {
        csv_row(&[
            &r.ways,
            &r.trial,
            &r.seed,
            &r.result.spilled,
            &r.result.throws_before_spill,
            &r.result.capacity_violation,
        ])
    })
}

pub(crate) const POINT_COLUMNS: [&str; 5] = [
    "ways",
    "trials",
    "spilled_trials",
    "median_throws",
    "budget",
];

pub(crate) fn point_rows<'a>(
    table: &'a SweepTable,
    budget: u64,
) -> impl Iterator<Item = Vec<String>> + 'a {
    table.points.iter().map(move |p| {
        csv_row(&[
            &p.ways,
            &p.trials,
            &p.spilled_trials,
            &p.median_throws,
            &budget,
        ])
    })
}

pub struct BnbExperiment;

impl Experiment for BnbExperiment {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::Bnb
    }

    fn description(&self) -> &'static str {
        "buckets-and-balls spill trials for each requested associativity"
    }

    fn run(&self, spec: &ExperimentSpec, out: &mut OutputDir) -> Result<Outcome> {
        let params = expect_params!(spec, Bnb);
        let template = params.template(spec);
        let table = bnb_sweep(params.ways.iter().copied(), spec.trials, &template)?;
        // Budget as counted in throws_before_spill: fill plus steady state.
        let budget = template.total_balls() + template.max_throws;
        out.write_csv("bnb.csv", &SWEEP_COLUMNS, sweep_rows(&table))?;
        out.write_csv("bnb_points.csv", &POINT_COLUMNS, point_rows(&table, budget))?;

        let violations: Vec<_> = table
            .rows
            .iter()
            .filter(|r| r.result.capacity_violation)
            .collect();
        let verdict = match violations.first() {
            None => Verdict::Ok,
            Some(first) => Verdict::CapacityViolation(format!(
                "{} of {} trials exceeded the modeled capacity of {} lines \
                 (first: W={}, trial {}, {} balls at first spill)",
                violations.len(),
                table.rows.len(),
                template.total_balls(),
                first.ways,
                first.trial,
                first.result.balls_in_model_at_end,
            )),
        };
        Ok(Outcome {
            summary: serde_json::json!({
                "remove_ball_enabled": template.remove_ball_enabled,
                "total_balls": template.total_balls(),
                "points": table.points,
            }),
            verdict,
        })
    }
}

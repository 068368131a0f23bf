use serde::{Deserialize, Serialize};

use super::bnb::{POINT_COLUMNS, SWEEP_COLUMNS};
use super::{
    csv_row, expect_params, Experiment, ExperimentKind, ExperimentSpec, Outcome, OutputDir,
};
use crate::analysis::LinearFit;
use crate::bnb::{bnb_sweep, BnbConfig, SweepTable};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig6Params {
    pub ways: Vec<u32>,
    pub buckets_per_skew: usize,
    pub average_load: u32,
    pub max_throws: u64,
}

impl Default for Fig6Params {
    fn default() -> Self {
        let d = BnbConfig::default();
        Fig6Params {
            ways: (9..=14).collect(),
            buckets_per_skew: d.buckets_per_skew,
            average_load: d.average_load,
            max_throws: d.max_throws,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig6Result {
    pub correct: SweepTable,
    pub bug_compat: SweepTable,
    /// Least-squares fit of bug-compat median throws against W.
    pub bug_compat_fit: Option<LinearFit>,
    /// median(W + 1) / median(W) in correct mode, for consecutive W.
    pub correct_ratios: Vec<f64>,
    pub budget: u64,
}

/// Sweeps both models over the same W values. Both modes use the same
/// per-(W, trial) seeds, so their fill phases coincide.
pub fn fig6_experiment(params: &Fig6Params, trials: u32, seed: u64) -> Result<Fig6Result> {
    let template = BnbConfig {
        buckets_per_skew: params.buckets_per_skew,
        capacity_per_bucket: params.ways.first().copied().unwrap_or(14),
        average_load: params.average_load,
        max_throws: params.max_throws,
        remove_ball_enabled: true,
        rng_seed: seed,
    };
    let correct = bnb_sweep(params.ways.iter().copied(), trials, &template)?;
    let bug_compat = bnb_sweep(
        params.ways.iter().copied(),
        trials,
        &BnbConfig {
            remove_ball_enabled: false,
            ..template.clone()
        },
    )?;

    let xs: Vec<f64> = bug_compat
        .points
        .iter()
        .map(|p| f64::from(p.ways))
        .collect();
    let ys: Vec<f64> = bug_compat.points.iter().map(|p| p.median_throws).collect();
    let correct_ratios = correct
        .points
        .windows(2)
        .filter(|w| w[1].ways == w[0].ways + 1)
        .map(|w| w[1].median_throws / w[0].median_throws)
        .collect();
    Ok(Fig6Result {
        bug_compat_fit: LinearFit::fit(&xs, &ys),
        correct,
        bug_compat,
        correct_ratios,
        budget: template.total_balls() + template.max_throws,
    })
}

pub struct Fig6Experiment;

impl Experiment for Fig6Experiment {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::Fig6Bnb
    }

    fn description(&self) -> &'static str {
        "throws before the first spill versus W, with and without ball removal"
    }

    fn run(&self, spec: &ExperimentSpec, out: &mut OutputDir) -> Result<Outcome> {
        let params = expect_params!(spec, Fig6);
        if spec.bug_compat.any() {
            log::info!("fig6 always runs both modes; --bug-compat flags are ignored");
        }
        let result = fig6_experiment(params, spec.trials, spec.seed)?;

        let modes = [
            ("correct", &result.correct),
            ("bug-compat", &result.bug_compat),
        ];
        let mut columns = vec!["mode"];
        columns.extend(SWEEP_COLUMNS);
        out.write_csv(
            "fig6.csv",
            &columns,
            modes.iter().flat_map(|(mode, table)| {
                table.rows.iter().map(move |r| {
                    csv_row(&[
                        mode,
                        &r.ways,
                        &r.trial,
                        &r.seed,
                        &r.result.spilled,
                        &r.result.throws_before_spill,
                        &r.result.capacity_violation,
                    ])
                })
            }),
        )?;
        let mut columns = vec!["mode"];
        columns.extend(POINT_COLUMNS);
        out.write_csv(
            "fig6_medians.csv",
            &columns,
            modes.iter().flat_map(|(mode, table)| {
                table.points.iter().map(move |p| {
                    csv_row(&[
                        mode,
                        &p.ways,
                        &p.trials,
                        &p.spilled_trials,
                        &p.median_throws,
                        &result.budget,
                    ])
                })
            }),
        )?;

        Outcome::ok(serde_json::json!({
            "budget": result.budget,
            "correct_points": result.correct.points,
            "bug_compat_points": result.bug_compat.points,
            "correct_ratios": result.correct_ratios,
            "bug_compat_fit": result.bug_compat_fit,
        }))
    }
}

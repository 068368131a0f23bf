use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{
    csv_row, expect_params, Experiment, ExperimentKind, ExperimentSpec, Outcome, OutputDir, Verdict,
};
use crate::ciphers::kat::{self, KatOutcome};
use crate::ciphers::BlockCipherKind;
use crate::error::Result;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KatParams {
    /// Vector file to use instead of the bundled one.
    pub vectors: Option<PathBuf>,
}

pub struct KatExperiment;

impl Experiment for KatExperiment {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::CiphersKat
    }

    fn description(&self) -> &'static str {
        "known-answer vectors for every cipher backend"
    }

    fn run(&self, spec: &ExperimentSpec, out: &mut OutputDir) -> Result<Outcome> {
        let params = expect_params!(spec, CiphersKat);
        let vectors = match &params.vectors {
            Some(path) => kat::load_vectors(path)?,
            None => kat::bundled_vectors(),
        };
        let report = kat::run(&vectors);
        let row = |o: &KatOutcome| {
            csv_row(&[
                &o.cipher.name(),
                &o.key,
                &o.plaintext,
                &o.expected,
                &o.actual,
                &o.pass,
            ])
        };
        out.write_csv(
            "kat.csv",
            &["cipher", "key", "plaintext", "expected", "actual", "pass"],
            report
                .outcomes
                .iter()
                .chain(&report.buggy_outcomes)
                .map(row),
        )?;

        let per_cipher: Vec<_> = BlockCipherKind::ALL
            .into_iter()
            .filter_map(|kind| {
                let list: Vec<&KatOutcome> = report
                    .outcomes
                    .iter()
                    .chain(&report.buggy_outcomes)
                    .filter(|o| o.cipher == kind)
                    .collect();
                (!list.is_empty()).then(|| {
                    serde_json::json!({
                        "cipher": kind.name(),
                        "vectors": list.len(),
                        "passed": list.iter().filter(|o| o.pass).count(),
                    })
                })
            })
            .collect();
        let verdict = if report.ok() {
            Verdict::Ok
        } else if !report.correct_ciphers_pass() {
            Verdict::CheckFailed("a correct cipher missed a known-answer vector".into())
        } else {
            Verdict::CheckFailed("the defective PRESENT matched every PRESENT-80 vector".into())
        };
        Ok(Outcome {
            summary: serde_json::json!({
                "correct_ciphers_pass": report.correct_ciphers_pass(),
                "buggy_fails": report.buggy_fails(),
                "ciphers": per_cipher,
            }),
            verdict,
        })
    }
}

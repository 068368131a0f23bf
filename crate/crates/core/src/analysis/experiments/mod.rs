//! Experiment runners behind a name-keyed registry.
//!
//! Every run writes into its own output directory: one or more CSV files
//! (header row first) plus `manifest.json`. CSV contents depend only on the
//! spec, so reruns are byte-identical; the manifest additionally records
//! wall time and the git revision.

mod bnb;
mod cache_run;
mod fig6;
mod fig7;
mod init_occupancy;
mod kat;
mod uniformity;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::bugcompat::BugCompat;
use crate::error::{Error, Result};

pub use self::bnb::{BnbExperiment, BnbParams};
pub use self::cache_run::{CacheExperiment, CacheInit, CacheRunParams};
pub use self::fig6::{fig6_experiment, Fig6Experiment, Fig6Params, Fig6Result};
pub use self::fig7::{fig7_experiment, Fig7Experiment, Fig7Mode, Fig7Params, Fig7Row};
pub use self::init_occupancy::{
    init_occupancy_experiment, InitMode, InitOccupancyExperiment, InitOccupancyParams,
    InitOccupancyResult, InitTrial,
};
pub use self::kat::{KatExperiment, KatParams};
pub use self::uniformity::{
    uniformity_experiment, UniformityExperiment, UniformityParams, UniformityResult,
};

/// Version of the CSV and manifest layout consumed by downstream tooling.
pub const OUTPUT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Bnb,
    Cache,
    Fig6Bnb,
    Fig7Sae,
    InitOccupancy,
    IndexUniformity,
    CiphersKat,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Bnb,
        ExperimentKind::Cache,
        ExperimentKind::Fig6Bnb,
        ExperimentKind::Fig7Sae,
        ExperimentKind::InitOccupancy,
        ExperimentKind::IndexUniformity,
        ExperimentKind::CiphersKat,
    ];

    /// Registry key; doubles as the CLI subcommand.
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Bnb => "bnb",
            ExperimentKind::Cache => "cache",
            ExperimentKind::Fig6Bnb => "fig6",
            ExperimentKind::Fig7Sae => "fig7",
            ExperimentKind::InitOccupancy => "init-occupancy",
            ExperimentKind::IndexUniformity => "uniformity",
            ExperimentKind::CiphersKat => "ciphers-kat",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentParams {
    Bnb(BnbParams),
    Cache(CacheRunParams),
    Fig6(Fig6Params),
    Fig7(Fig7Params),
    InitOccupancy(InitOccupancyParams),
    Uniformity(UniformityParams),
    CiphersKat(KatParams),
}

impl ExperimentParams {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            ExperimentParams::Bnb(_) => ExperimentKind::Bnb,
            ExperimentParams::Cache(_) => ExperimentKind::Cache,
            ExperimentParams::Fig6(_) => ExperimentKind::Fig6Bnb,
            ExperimentParams::Fig7(_) => ExperimentKind::Fig7Sae,
            ExperimentParams::InitOccupancy(_) => ExperimentKind::InitOccupancy,
            ExperimentParams::Uniformity(_) => ExperimentKind::IndexUniformity,
            ExperimentParams::CiphersKat(_) => ExperimentKind::CiphersKat,
        }
    }
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSpec {
    pub seed: u64,
    pub trials: u32,
    /// Worker threads; `None` uses the available parallelism.
    pub threads: Option<usize>,
    pub full_scale: bool,
    pub bug_compat: BugCompat,
    pub out_dir: PathBuf,
    pub params: ExperimentParams,
}

impl ExperimentSpec {
    pub fn new(params: ExperimentParams, out_dir: impl Into<PathBuf>) -> Self {
        ExperimentSpec {
            seed: 0,
            trials: 1,
            threads: None,
            full_scale: false,
            bug_compat: BugCompat::NONE,
            out_dir: out_dir.into(),
            params,
        }
    }

    pub fn experiment(&self) -> ExperimentKind {
        self.params.kind()
    }
}

/// How a completed run should be judged by the caller.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "detail", rename_all = "kebab-case")]
pub enum Verdict {
    Ok,
    /// A bug-compat run tripped the capacity assertion. Outputs are still
    /// written.
    CapacityViolation(String),
    /// A self-check failed (e.g. known-answer vectors).
    CheckFailed(String),
}

/// What an experiment hands back to the driver.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: serde_json::Value,
    pub verdict: Verdict,
}

impl Outcome {
    pub fn ok(summary: impl Serialize) -> Result<Self> {
        Ok(Outcome {
            summary: serde_json::to_value(summary)?,
            verdict: Verdict::Ok,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: usize,
}

/// Output directory of a single run.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<OutputFile>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[OutputFile] {
        &self.files
    }

    /// Writes a CSV with a header row; each row is a list of fields.
    pub fn write_csv<I>(&mut self, name: &str, columns: &[&str], rows: I) -> Result<PathBuf>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.root.join(name);
        let mut writer = csv::Writer::from_path(&path).map_err(csv_error)?;
        writer.write_record(columns).map_err(csv_error)?;
        let mut count = 0;
        for row in rows {
            writer.write_record(&row).map_err(csv_error)?;
            count += 1;
        }
        writer.flush()?;
        self.files.push(OutputFile {
            name: name.to_owned(),
            columns: columns.iter().map(|c| (*c).to_owned()).collect(),
            rows: count,
        });
        Ok(path)
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<PathBuf> {
        let path = self.root.join(name);
        fs::write(&path, serde_json::to_vec_pretty(value)?)?;
        self.files.push(OutputFile {
            name: name.to_owned(),
            columns: Vec::new(),
            rows: 0,
        });
        Ok(path)
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Formats CSV fields; floats use Rust's shortest round-trip representation.
pub(crate) fn csv_row(fields: &[&dyn std::fmt::Display]) -> Vec<String> {
    fields.iter().map(|f| f.to_string()).collect()
}

/// Renders an optional value as an empty field when absent.
pub(crate) fn opt<T: ToString>(value: Option<T>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

pub trait Experiment: Send + Sync {
    fn kind(&self) -> ExperimentKind;

    fn description(&self) -> &'static str;

    /// Runs inside the driver's worker pool and writes into `out`.
    fn run(&self, spec: &ExperimentSpec, out: &mut OutputDir) -> Result<Outcome>;
}

/// Experiments keyed by name.
pub struct ExperimentRegistry {
    entries: BTreeMap<&'static str, Box<dyn Experiment>>,
}

impl ExperimentRegistry {
    pub fn empty() -> Self {
        ExperimentRegistry {
            entries: BTreeMap::new(),
        }
    }

    pub fn standard() -> Self {
        let mut r = ExperimentRegistry::empty();
        r.register(Box::new(BnbExperiment));
        r.register(Box::new(CacheExperiment));
        r.register(Box::new(Fig6Experiment));
        r.register(Box::new(Fig7Experiment));
        r.register(Box::new(InitOccupancyExperiment));
        r.register(Box::new(UniformityExperiment));
        r.register(Box::new(KatExperiment));
        r
    }

    /// Adds or replaces the experiment registered under the same name.
    pub fn register(&mut self, experiment: Box<dyn Experiment>) {
        self.entries.insert(experiment.kind().name(), experiment);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Experiment> {
        self.entries.get(name).map(|e| e.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }
}

impl Default for ExperimentRegistry {
    fn default() -> Self {
        ExperimentRegistry::standard()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BugCompatManifest {
    pub enabled: bool,
    pub flags: Vec<&'static str>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub experiment: &'static str,
    /// Listed before everything else so defective modes are hard to miss.
    pub bug_compat: BugCompatManifest,
    pub seed: u64,
    /// How per-trial seeds are derived from `seed`.
    pub seed_derivation: &'static str,
    pub trials: u32,
    pub threads: Option<usize>,
    pub full_scale: bool,
    pub params: ExperimentParams,
    pub git_revision: Option<String>,
    pub wall_time_seconds: f64,
    pub files: Vec<OutputFile>,
    pub verdict: Verdict,
    pub summary: serde_json::Value,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub manifest: Manifest,
    pub out_dir: PathBuf,
}

impl RunReport {
    pub fn verdict(&self) -> &Verdict {
        &self.manifest.verdict
    }
}

fn git_revision() -> Option<String> {
    let out = std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()?;
    if !out.status.success() {
        return None;
    }
    let rev = String::from_utf8(out.stdout).ok()?;
    Some(rev.trim().to_owned())
}

/// Runs `spec` through the registered experiment and writes the manifest.
pub fn run_experiment(registry: &ExperimentRegistry, spec: &ExperimentSpec) -> Result<RunReport> {
    let name = spec.experiment().name();
    let experiment = registry
        .get(name)
        .ok_or_else(|| Error::config(format!("no experiment registered as {name:?}")))?;
    if spec.trials == 0 {
        return Err(Error::config("trials must be positive"));
    }
    if spec.threads == Some(0) {
        return Err(Error::config("threads must be positive"));
    }
    if spec.bug_compat.any() {
        log::warn!(
            "bug-compat flags enabled: {}",
            flag_names(&spec.bug_compat).join(", ")
        );
    }

    let mut out = OutputDir::create(&spec.out_dir)?;
    let start = Instant::now();
    let outcome = match spec.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config(format!("cannot build worker pool: {e}")))?
            .install(|| experiment.run(spec, &mut out))?,
        None => experiment.run(spec, &mut out)?,
    };
    let wall = start.elapsed().as_secs_f64();

    let manifest = Manifest {
        schema_version: OUTPUT_SCHEMA_VERSION,
        tool: "mirage",
        tool_version: env!("CARGO_PKG_VERSION"),
        experiment: name,
        bug_compat: BugCompatManifest {
            enabled: spec.bug_compat.any(),
            flags: flag_names(&spec.bug_compat),
        },
        seed: spec.seed,
        seed_derivation: "trial seed = splitmix64(seed + ((point << 32) | trial)); \
                          rng = xoshiro256++ seeded via splitmix64",
        trials: spec.trials,
        threads: spec.threads,
        full_scale: spec.full_scale,
        params: spec.params.clone(),
        git_revision: git_revision(),
        wall_time_seconds: wall,
        files: out.files().to_vec(),
        verdict: outcome.verdict,
        summary: outcome.summary,
    };
    fs::write(
        out.path().join("manifest.json"),
        serde_json::to_vec_pretty(&manifest)?,
    )?;
    Ok(RunReport {
        manifest,
        out_dir: spec.out_dir.clone(),
    })
}

fn flag_names(bc: &BugCompat) -> Vec<&'static str> {
    bc.flags().into_iter().map(|f| f.name()).collect()
}

/// Pulls the params variant an experiment expects out of the spec.
macro_rules! expect_params {
    ($spec:expr, $variant:ident) => {
        match &$spec.params {
            $crate::analysis::experiments::ExperimentParams::$variant(p) => p,
            other => {
                return Err($crate::error::Error::config(format!(
                    "experiment received {:?} parameters",
                    other.kind()
                )))
            }
        }
    };
}
pub(crate) use expect_params;

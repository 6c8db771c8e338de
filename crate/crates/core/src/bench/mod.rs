//! Benchmark harness behind the `sscn` binary: experiment configs, trace CSVs,
//! summary JSON and the validation suites.

pub mod config;
pub mod output;
pub mod validate;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::baselines::cd_run;
use crate::error::SscnError;
use crate::optimizer::{run, RunTrace};
pub use config::{ExperimentConfig, MethodKind, MethodPlan, ResolvedMethod};
pub use output::{RunSummary, Summary, TraceRow, COMPARE_HEADER, TRACE_HEADER};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("dataset not found: {}", .0.display())]
    MissingDataset(PathBuf),

    #[error("unknown validation suite {0:?} (expected one of subproblem, concentration, gradcheck, lemma1)")]
    UnknownSuite(String),

    #[error("run {run_id} aborted: {source}")]
    Run { run_id: String, source: SscnError },

    #[error("output error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl BenchError {
    /// Process exit code: 3 for a non-finite abort, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Run { source: SscnError::Diverged { .. }, .. } => 3,
            _ => 2,
        }
    }
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub max_seconds: Option<f64>,
    /// Force the elapsed column to zero.
    pub no_timing: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<(), BenchError> {
        if let Some(seed) = self.seed {
            cfg.run.seeds = vec![seed];
        }
        if let Some(t) = self.max_seconds {
            if !(t > 0.0) {
                return Err(BenchError::Config(format!("--max-seconds {t} must be positive")));
            }
            cfg.stop.max_seconds = Some(t);
        }
        if self.no_timing {
            cfg.run.record_timing = false;
        }
        Ok(())
    }
}

/// One finished (method, seed) run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run_id: String,
    pub method: String,
    pub kind: MethodKind,
    pub schedule: String,
    pub seed: u64,
    pub trace: RunTrace,
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' }).collect()
}

pub fn run_id(label: &str, seed: u64) -> String {
    format!("{}-seed{seed}", sanitize(label))
}

/// Runs every (method, seed) pair. Runs execute in parallel; results come
/// back in config order, and the first failing run in that order is reported.
pub fn execute(cfg: &ExperimentConfig) -> Result<Vec<RunOutcome>, BenchError> {
    let problem = cfg.build_problem()?;
    let obj = problem.objective.as_ref();
    let methods = cfg.resolve_methods(obj)?;
    let jobs: Vec<(&ResolvedMethod, u64)> =
        methods.iter().flat_map(|m| cfg.run.seeds.iter().map(move |&s| (m, s))).collect();
    let results: Vec<Result<RunOutcome, BenchError>> = jobs
        .par_iter()
        .map(|&(m, seed)| {
            let id = run_id(&m.label, seed);
            log::info!("starting {id}");
            let trace = match m.plan.with_seed(seed) {
                MethodPlan::Sscn(c) => run(obj, &problem.x0, &c),
                MethodPlan::Cd(c) => cd_run(obj, &problem.x0, &c),
            }
            .map_err(|source| BenchError::Run { run_id: id.clone(), source })?;
            log::info!("finished {id}: {} after {} iterations", trace.termination.as_str(), trace.iterations());
            Ok(RunOutcome { run_id: id, method: m.label.clone(), kind: m.kind, schedule: m.schedule_label.clone(), seed, trace })
        })
        .collect();
    results.into_iter().collect()
}

fn prepare(config_path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, BenchError> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    overrides.apply(&mut cfg)?;
    Ok(cfg)
}

/// `run`: one trace CSV per (method, seed) plus `summary.json` in `out`.
pub fn cmd_run(config_path: &Path, out: &Path, overrides: &Overrides) -> Result<Summary, BenchError> {
    let cfg = prepare(config_path, overrides)?;
    let outcomes = execute(&cfg)?;
    std::fs::create_dir_all(out)?;
    let mut files = Vec::with_capacity(outcomes.len());
    for o in &outcomes {
        let path = out.join(format!("{}.csv", o.run_id));
        output::write_trace_csv(&path, o, cfg.run.record_timing)?;
        files.push(path);
    }
    let summary = output::summarize(&cfg, &outcomes, &files);
    output::write_summary(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// `compare`: a single long-format `compare.csv` keyed by (method, schedule,
/// seed, k) plus `summary.json`. Needs at least two method blocks.
pub fn cmd_compare(config_path: &Path, out: &Path, overrides: &Overrides) -> Result<Summary, BenchError> {
    let cfg = prepare(config_path, overrides)?;
    if cfg.methods.len() < 2 {
        return Err(BenchError::Config(format!("compare needs at least two [[method]] blocks, found {}", cfg.methods.len())));
    }
    let outcomes = execute(&cfg)?;
    std::fs::create_dir_all(out)?;
    let path = out.join("compare.csv");
    output::write_compare_csv(&path, &outcomes, cfg.run.record_timing)?;
    let files = vec![path; outcomes.len()];
    let summary = output::summarize(&cfg, &outcomes, &files);
    output::write_summary(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

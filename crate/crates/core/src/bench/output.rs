//! Trace CSV rows and the summary JSON.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::{BenchError, RunOutcome};
use crate::optimizer::IterationRecord;

/// Column order of per-run trace files (schema version 1).
pub const TRACE_HEADER: &str =
    "run_id,method,seed,k,tau,f,grad_subset_norm,full_grad_norm,step_norm,M,coord_cost,cum_coord_cost,elapsed_s,m_retries";

/// Column order of `compare.csv`: the trace columns with `schedule` after `method`.
pub const COMPARE_HEADER: &str = "run_id,method,schedule,seed,k,tau,f,grad_subset_norm,full_grad_norm,step_norm,M,coord_cost,cum_coord_cost,elapsed_s,m_retries";

/// Format version written into `summary.json`.
pub const SUMMARY_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct TraceRow<'a> {
    pub run_id: &'a str,
    pub method: &'a str,
    pub seed: u64,
    pub k: usize,
    pub tau: usize,
    pub f: f64,
    pub grad_subset_norm: f64,
    /// Empty when the full gradient was not evaluated at this iteration.
    pub full_grad_norm: Option<f64>,
    pub step_norm: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub coord_cost: u64,
    pub cum_coord_cost: u64,
    pub elapsed_s: f64,
    pub m_retries: usize,
}

#[derive(Debug, Clone, Serialize)]
struct CompareRow<'a> {
    run_id: &'a str,
    method: &'a str,
    schedule: &'a str,
    seed: u64,
    k: usize,
    tau: usize,
    f: f64,
    grad_subset_norm: f64,
    full_grad_norm: Option<f64>,
    step_norm: f64,
    #[serde(rename = "M")]
    m: f64,
    coord_cost: u64,
    cum_coord_cost: u64,
    elapsed_s: f64,
    m_retries: usize,
}

impl<'a> TraceRow<'a> {
    pub fn new(o: &'a RunOutcome, r: &IterationRecord, timing: bool) -> Self {
        Self {
            run_id: &o.run_id,
            method: &o.method,
            seed: o.seed,
            k: r.k,
            tau: r.tau,
            f: r.f_value,
            grad_subset_norm: r.grad_subset_norm,
            full_grad_norm: r.full_grad_norm,
            step_norm: r.step_norm,
            m: r.m_k,
            coord_cost: r.coord_cost,
            cum_coord_cost: r.cumulative_coord_cost,
            elapsed_s: if timing { r.elapsed_seconds } else { 0.0 },
            m_retries: r.m_retries,
        }
    }
}

pub fn write_trace_csv(path: &Path, o: &RunOutcome, timing: bool) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in &o.trace.records {
        w.serialize(TraceRow::new(o, r, timing))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_compare_csv(path: &Path, outcomes: &[RunOutcome], timing: bool) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    for o in outcomes {
        for r in &o.trace.records {
            let t = TraceRow::new(o, r, timing);
            w.serialize(CompareRow {
                run_id: t.run_id,
                method: t.method,
                schedule: &o.schedule,
                seed: t.seed,
                k: t.k,
                tau: t.tau,
                f: t.f,
                grad_subset_norm: t.grad_subset_norm,
                full_grad_norm: t.full_grad_norm,
                step_norm: t.step_norm,
                m: t.m,
                coord_cost: t.coord_cost,
                cum_coord_cost: t.cum_coord_cost,
                elapsed_s: t.elapsed_s,
                m_retries: t.m_retries,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub run_id: String,
    pub method: String,
    pub kind: &'static str,
    pub schedule: String,
    pub seed: u64,
    pub termination: &'static str,
    pub iterations: usize,
    pub cum_coord_cost: u64,
    pub final_f: f64,
    pub final_grad_norm: f64,
    pub elapsed_s: f64,
    pub csv: PathBuf,
}

/// Mean and sample standard deviation (zero for a single seed).
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub method: String,
    pub schedule: String,
    pub seeds: usize,
    pub iterations: MeanStd,
    pub cum_coord_cost: MeanStd,
    pub final_f: MeanStd,
    pub final_grad_norm: MeanStd,
    pub elapsed_s: MeanStd,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub format_version: u32,
    pub config: ExperimentConfig,
    pub runs: Vec<RunSummary>,
    pub aggregate: Vec<Aggregate>,
}

pub fn summarize(cfg: &ExperimentConfig, outcomes: &[RunOutcome], files: &[PathBuf]) -> Summary {
    let timing = cfg.run.record_timing;
    let runs: Vec<RunSummary> = outcomes
        .iter()
        .zip(files)
        .map(|(o, file)| {
            let last = o.trace.last();
            RunSummary {
                run_id: o.run_id.clone(),
                method: o.method.clone(),
                kind: o.kind.as_str(),
                schedule: o.schedule.clone(),
                seed: o.seed,
                termination: o.trace.termination.as_str(),
                iterations: o.trace.iterations(),
                cum_coord_cost: last.cumulative_coord_cost,
                final_f: last.f_value,
                final_grad_norm: last.full_grad_norm.expect("the last record carries the full gradient norm"),
                elapsed_s: if timing { last.elapsed_seconds } else { 0.0 },
                csv: file.clone(),
            }
        })
        .collect();

    let mut aggregate: Vec<Aggregate> = Vec::new();
    let mut methods: Vec<&str> = Vec::new();
    for r in &runs {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    for m in methods {
        let group: Vec<&RunSummary> = runs.iter().filter(|r| r.method == m).collect();
        let col = |f: &dyn Fn(&RunSummary) -> f64| MeanStd::of(&group.iter().map(|r| f(r)).collect::<Vec<_>>());
        aggregate.push(Aggregate {
            method: m.to_string(),
            schedule: group[0].schedule.clone(),
            seeds: group.len(),
            iterations: col(&|r| r.iterations as f64),
            cum_coord_cost: col(&|r| r.cum_coord_cost as f64),
            final_f: col(&|r| r.final_f),
            final_grad_norm: col(&|r| r.final_grad_norm),
            elapsed_s: col(&|r| r.elapsed_s),
        });
    }
    Summary { format_version: SUMMARY_VERSION, config: cfg.clone(), runs, aggregate }
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<(), BenchError> {
    let text = serde_json::to_string_pretty(summary)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

//! Stochastic subspace cubic Newton.
//!
//! Each iteration samples a coordinate subset `S_k`, builds the cubic model on
//! it, picks the regularization weight `M_k`, minimizes the model exactly and
//! moves only the sampled coordinates.

use std::time::Instant;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SscnError};
use crate::model::{build_model_from_parts, CurvatureSource, LazyCache};
use crate::objectives::{min_eigenvalue_sym, Objective};
use crate::subproblem::{solve_global, SubproblemSolution, DEFAULT_TOL};
use crate::subset::{sample_uniform, CoordinateSubset, SamplingSchedule, ScheduleState};

/// Largest dimension for which [`criticality_mu`] forms the full Hessian.
pub const MU_DIAGNOSTIC_LIMIT: usize = 2000;

/// How `M_k` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MPolicy {
    Fixed { m: f64 },
    /// Multiply by `grow` until the progress condition `f(x + h) ≤ m(h)`
    /// holds, then start the next iteration from `max(shrink·M, m_min)`.
    AdaptiveDoubling { m0: f64, grow: f64, shrink: f64, m_min: f64 },
    /// `M_k = 2L₂ + 7²(σ + L₁)²/(2‖∇f(x_k)|_S‖)`.
    TheoryRule { sigma: f64, l1: f64, l2: f64 },
}

impl Default for MPolicy {
    fn default() -> Self {
        Self::AdaptiveDoubling { m0: 1.0, grow: 2.0, shrink: 0.5, m_min: 1e-6 }
    }
}

impl MPolicy {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SscnError::InvalidParameter(msg));
        match *self {
            Self::Fixed { m } if !(m > 0.0 && m.is_finite()) => bad(format!("fixed M = {m} must be positive")),
            Self::AdaptiveDoubling { m0, grow, shrink, m_min }
                if !(m0 > 0.0 && grow > 1.0 && shrink > 0.0 && shrink <= 1.0 && m_min > 0.0) =>
            {
                bad(format!("adaptive M needs m0 > 0, grow > 1, shrink in (0, 1], m_min > 0 (got {m0}, {grow}, {shrink}, {m_min})"))
            }
            Self::TheoryRule { sigma, l1, l2 } if !(sigma >= 0.0 && l1 >= 0.0 && l2 >= 0.0 && l2 + l1 + sigma > 0.0) => {
                bad(format!("theory rule needs nonnegative sigma, L1, L2 (got {sigma}, {l1}, {l2})"))
            }
            _ => Ok(()),
        }
    }
}

/// Stopping rules shared by all methods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCriteria {
    /// Stop once the full gradient norm is at most this.
    pub grad_tol: f64,
    pub max_iters: usize,
    pub max_seconds: Option<f64>,
}

impl Default for StopCriteria {
    fn default() -> Self {
        Self { grad_tol: 1e-6, max_iters: 1000, max_seconds: None }
    }
}

impl StopCriteria {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(SscnError::InvalidParameter(format!("grad_tol = {} must be positive", self.grad_tol)));
        }
        if self.max_iters == 0 {
            return Err(SscnError::InvalidParameter("max_iters must be at least 1".into()));
        }
        if let Some(t) = self.max_seconds {
            if !(t > 0.0) {
                return Err(SscnError::InvalidParameter(format!("max_seconds = {t} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub m_policy: MPolicy,
    pub schedule: SamplingSchedule,
    pub curvature: CurvatureSource,
    pub subproblem_tol: f64,
    pub stop: StopCriteria,
    pub seed: u64,
    /// Cadence (in iterations) of the full-gradient diagnostic and stopping test.
    pub full_grad_every: usize,
    /// Keep every iterate in the trace.
    pub record_iterates: bool,
    /// Cap on `M` increases within one adaptive step before giving up on moving.
    pub max_m_retries: usize,
}

impl OptimizerConfig {
    pub fn new(schedule: SamplingSchedule) -> Self {
        Self {
            m_policy: MPolicy::default(),
            schedule,
            curvature: CurvatureSource::ExactSubHessian,
            subproblem_tol: DEFAULT_TOL,
            stop: StopCriteria::default(),
            seed: 0,
            full_grad_every: 10,
            record_iterates: false,
            max_m_retries: 60,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.m_policy.validate()?;
        self.schedule.validate(n)?;
        self.curvature.validate()?;
        self.stop.validate()?;
        if !(self.subproblem_tol > 0.0) {
            return Err(SscnError::InvalidParameter(format!("subproblem_tol = {} must be positive", self.subproblem_tol)));
        }
        if self.full_grad_every == 0 {
            return Err(SscnError::InvalidParameter("full_grad_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Telemetry for one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub tau: usize,
    /// `f(x_{k+1})`.
    pub f_value: f64,
    pub grad_subset_norm: f64,
    pub full_grad_norm: Option<f64>,
    pub step_norm: f64,
    /// Regularization weight used; for coordinate descent the accepted step size.
    pub m_k: f64,
    pub coord_cost: u64,
    pub cumulative_coord_cost: u64,
    pub elapsed_seconds: f64,
    /// `M` increases (cubic methods) or backtracks (coordinate descent).
    pub m_retries: usize,
    /// Model value at the accepted step, `f(x_k)` when the step did not move.
    pub predicted_f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradTol,
    MaxIters,
    MaxTime,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::GradTol => "grad_tol",
            Self::MaxIters => "max_iters",
            Self::MaxTime => "max_time",
        }
    }
}

/// Configuration snapshot stored with a trace.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceConfig {
    Sscn(OptimizerConfig),
    CoordinateDescent(crate::baselines::CdConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub config: TraceConfig,
    pub records: Vec<IterationRecord>,
    pub final_x: Vec<f64>,
    pub termination: Termination,
    /// `x_1, x_2, …` when iterate recording is on.
    pub iterates: Vec<Vec<f64>>,
}

impl RunTrace {
    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("completed runs have at least one record")
    }

    /// Number of optimization steps taken (the initial-check record is not a step).
    pub fn iterations(&self) -> usize {
        self.records.iter().filter(|r| r.tau > 0).count()
    }

    /// First `k + 1` at which the full gradient norm was observed at or below `tol`.
    pub fn iterations_to(&self, tol: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.full_grad_norm.is_some_and(|g| g <= tol))
            .map(|r| if r.tau == 0 { 0 } else { r.k + 1 })
    }
}

/// `2L₂ + 49(σ + L₁)²/(2‖g_S‖)`; `None` when `‖g_S‖ = 0` (the step does not move).
pub fn m_k_theory(sigma: f64, l1: f64, l2: f64, g_subset_norm: f64) -> Option<f64> {
    if g_subset_norm <= 0.0 {
        return None;
    }
    Some(2.0 * l2 + 49.0 * (sigma + l1).powi(2) / (2.0 * g_subset_norm))
}

/// Mutable per-run state carried across [`sscn_step`] calls.
#[derive(Debug, Clone)]
pub struct StepState {
    /// Current `M` for the adaptive policy.
    pub m: f64,
    pub lazy: LazyCache,
}

impl StepState {
    pub fn new(policy: &MPolicy) -> Self {
        let m = match *policy {
            MPolicy::Fixed { m } => m,
            MPolicy::AdaptiveDoubling { m0, .. } => m0,
            MPolicy::TheoryRule { .. } => f64::NAN,
        };
        Self { m, lazy: LazyCache::new() }
    }
}

/// Result of one step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub x_next: Vec<f64>,
    pub f_next: f64,
    pub f_prev: f64,
    pub grad_subset_norm: f64,
    pub step_norm: f64,
    pub m_k: f64,
    pub m_retries: usize,
    pub predicted_f: f64,
    /// `‖Q_S‖₂` of the model, tracked by the adaptive schedule.
    pub curvature_norm: f64,
    pub coord_cost: u64,
    pub moved: bool,
    pub solution: Option<SubproblemSolution>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|t| t * t).sum::<f64>().sqrt()
}

/// Progress condition `f(x + h) ≤ m(h)`, with slack for rounding in `f`.
/// Once the predicted decrease is below the resolution of `f` any step that
/// does not increase `f` passes. Never accepts an increase.
pub fn progress_holds(f_prev: f64, f_next: f64, model_value: f64) -> bool {
    let slack = rounding_slack(f_prev);
    f_next <= f_prev && (f_next <= model_value + slack || f_prev - model_value <= slack)
}

fn rounding_slack(f: f64) -> f64 {
    8.0 * f64::EPSILON * (1.0 + f.abs())
}

/// One SSCN iteration on the subset `s`.
pub fn sscn_step(
    obj: &dyn Objective,
    x: &[f64],
    s: &CoordinateSubset,
    config: &OptimizerConfig,
    state: &mut StepState,
) -> Result<StepOutcome> {
    obj.check_point(x)?;
    obj.check_subset(s)?;
    let fx = obj.value(x);
    if !fx.is_finite() {
        return Err(SscnError::Diverged { iteration: 0 });
    }
    let g = obj.grad_subset(x, s);
    let g_norm = norm(&g);
    let tau = s.tau() as u64;
    let stay = |m_k: f64, retries: usize, curvature_norm: f64, solution: Option<SubproblemSolution>| StepOutcome {
        x_next: x.to_vec(),
        f_next: fx,
        f_prev: fx,
        grad_subset_norm: g_norm,
        step_norm: 0.0,
        m_k,
        m_retries: retries,
        predicted_f: fx,
        curvature_norm,
        coord_cost: tau * tau + tau,
        moved: false,
        solution,
    };

    let m_initial = match config.m_policy {
        MPolicy::Fixed { m } => m,
        MPolicy::AdaptiveDoubling { .. } => state.m,
        MPolicy::TheoryRule { sigma, l1, l2 } => match m_k_theory(sigma, l1, l2, g_norm) {
            Some(m) => m,
            None => return Ok(stay(f64::NAN, 0, 0.0, None)),
        },
    };
    let model = build_model_from_parts(obj, x, fx, g, s, config.curvature, m_initial, Some(&mut state.lazy))?;

    let mut m_k = m_initial;
    let mut retries = 0;
    loop {
        let model_m = model.with_m(m_k)?;
        let sol = solve_global(&model_m, config.subproblem_tol)?;
        let curvature_norm = sol.q_norm;
        if sol.r == 0.0 {
            return Ok(stay(m_k, retries, curvature_norm, Some(sol)));
        }
        let x_next = s.apply_step(x, &sol.h_star)?;
        let f_next = obj.value(&x_next);
        let accept = match config.m_policy {
            MPolicy::AdaptiveDoubling { .. } => progress_holds(fx, f_next, sol.model_value),
            _ => true,
        };
        if accept {
            if !f_next.is_finite() {
                return Err(SscnError::Diverged { iteration: 0 });
            }
            if let MPolicy::AdaptiveDoubling { shrink, m_min, .. } = config.m_policy {
                state.m = (shrink * m_k).max(m_min);
            }
            return Ok(StepOutcome {
                x_next,
                f_next,
                f_prev: fx,
                grad_subset_norm: g_norm,
                step_norm: sol.r,
                m_k,
                m_retries: retries,
                predicted_f: sol.model_value,
                curvature_norm,
                coord_cost: tau * tau + tau,
                moved: true,
                solution: Some(sol),
            });
        }
        let MPolicy::AdaptiveDoubling { grow, .. } = config.m_policy else { unreachable!("only the adaptive policy rejects") };
        // A predicted decrease below the resolution of f says nothing about M.
        if fx - sol.model_value <= rounding_slack(fx) || retries >= config.max_m_retries {
            return Ok(stay(m_k, retries, curvature_norm, Some(sol)));
        }
        m_k *= grow;
        retries += 1;
    }
}

/// What a method reports back to the shared driver for one iteration.
pub(crate) struct DriverStep {
    pub x_next: Vec<f64>,
    pub f_next: f64,
    pub grad_subset_norm: f64,
    pub step_norm: f64,
    pub m_k: f64,
    pub m_retries: usize,
    pub predicted_f: f64,
    pub curvature_norm: f64,
    pub coord_cost: u64,
}

pub(crate) struct DriverOptions<'a> {
    pub schedule: &'a SamplingSchedule,
    pub stop: &'a StopCriteria,
    pub seed: u64,
    pub full_grad_every: usize,
    pub record_iterates: bool,
}

pub(crate) struct DriverOutput {
    pub records: Vec<IterationRecord>,
    pub final_x: Vec<f64>,
    pub termination: Termination,
    pub iterates: Vec<Vec<f64>>,
}

/// Iteration loop shared by SSCN and coordinate descent: subset sampling,
/// schedule bookkeeping, full-gradient diagnostics and stopping.
///
/// Subsets are the only consumer of the run's generator, so methods driven
/// with the same seed and a non-adaptive schedule see the same subsets.
pub(crate) fn drive<F>(obj: &dyn Objective, x0: &[f64], opts: DriverOptions<'_>, mut step: F) -> Result<DriverOutput>
where
    F: FnMut(&[f64], &CoordinateSubset) -> Result<DriverStep>,
{
    obj.check_point(x0)?;
    let n = obj.dim();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut sched = ScheduleState::new();
    let ema_alpha = match opts.schedule {
        SamplingSchedule::Adaptive(p) => p.ema_alpha,
        _ => 0.2,
    };

    let f0 = obj.value(x0);
    if !f0.is_finite() {
        return Err(SscnError::Diverged { iteration: 0 });
    }
    let initial_record = |f: f64, g: f64, elapsed: f64| IterationRecord {
        k: 0,
        tau: 0,
        f_value: f,
        grad_subset_norm: 0.0,
        full_grad_norm: Some(g),
        step_norm: 0.0,
        m_k: 0.0,
        coord_cost: 0,
        cumulative_coord_cost: 0,
        elapsed_seconds: elapsed,
        m_retries: 0,
        predicted_f: f,
    };
    let g0 = norm(&obj.grad_full(x0));
    if g0 <= opts.stop.grad_tol {
        return Ok(DriverOutput {
            records: vec![initial_record(f0, g0, start.elapsed().as_secs_f64())],
            final_x: x0.to_vec(),
            termination: Termination::GradTol,
            iterates: Vec::new(),
        });
    }

    let mut x = x0.to_vec();
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut iterates = Vec::new();
    let mut cumulative = 0u64;
    let mut termination = Termination::MaxIters;

    for k in 0..opts.stop.max_iters {
        if opts.stop.max_seconds.is_some_and(|t| start.elapsed().as_secs_f64() >= t) {
            termination = Termination::MaxTime;
            break;
        }
        let tau = opts.schedule.next_tau(&mut sched, n);
        let s = sample_uniform(n, tau, &mut rng)?;
        let out = step(&x, &s).map_err(|e| match e {
            SscnError::Diverged { .. } => SscnError::Diverged { iteration: k },
            other => other,
        })?;
        if !out.f_next.is_finite() {
            return Err(SscnError::Diverged { iteration: k });
        }
        sched.observe(out.grad_subset_norm, out.curvature_norm, out.step_norm, ema_alpha);
        x = out.x_next;
        cumulative += out.coord_cost;

        let last = k + 1 == opts.stop.max_iters;
        let full_grad_norm = ((k + 1) % opts.full_grad_every == 0 || last).then(|| norm(&obj.grad_full(&x)));
        records.push(IterationRecord {
            k,
            tau,
            f_value: out.f_next,
            grad_subset_norm: out.grad_subset_norm,
            full_grad_norm,
            step_norm: out.step_norm,
            m_k: out.m_k,
            coord_cost: out.coord_cost,
            cumulative_coord_cost: cumulative,
            elapsed_seconds: start.elapsed().as_secs_f64(),
            m_retries: out.m_retries,
            predicted_f: out.predicted_f,
        });
        if opts.record_iterates {
            iterates.push(x.clone());
        }
        if full_grad_norm.is_some_and(|g| g <= opts.stop.grad_tol) {
            termination = Termination::GradTol;
            break;
        }
    }

    match records.last_mut() {
        None => records.push(initial_record(f0, g0, start.elapsed().as_secs_f64())),
        Some(rec) if rec.full_grad_norm.is_none() => rec.full_grad_norm = Some(norm(&obj.grad_full(&x))),
        Some(_) => {}
    }
    Ok(DriverOutput { records, final_x: x, termination, iterates })
}

/// Runs SSCN from `x0` until a stopping rule fires.
pub fn run(obj: &dyn Objective, x0: &[f64], config: &OptimizerConfig) -> Result<RunTrace> {
    obj.check_point(x0)?;
    config.validate(obj.dim())?;
    let mut state = StepState::new(&config.m_policy);
    let opts = DriverOptions {
        schedule: &config.schedule,
        stop: &config.stop,
        seed: config.seed,
        full_grad_every: config.full_grad_every,
        record_iterates: config.record_iterates,
    };
    let out = drive(obj, x0, opts, |x, s| {
        let o = sscn_step(obj, x, s, config, &mut state)?;
        Ok(DriverStep {
            x_next: o.x_next,
            f_next: o.f_next,
            grad_subset_norm: o.grad_subset_norm,
            step_norm: o.step_norm,
            m_k: o.m_k,
            m_retries: o.m_retries,
            predicted_f: o.predicted_f,
            curvature_norm: o.curvature_norm,
            coord_cost: o.coord_cost,
        })
    })?;
    Ok(RunTrace {
        config: TraceConfig::Sscn(config.clone()),
        records: out.records,
        final_x: out.final_x,
        termination: out.termination,
        iterates: out.iterates,
    })
}

/// `μ(x) = max{‖∇f(x)‖^{3/2}, [−λ_min(∇²f(x))]³}`, with the curvature branch
/// contributing zero when the Hessian is positive semidefinite.
pub fn criticality_mu(obj: &dyn Objective, x: &[f64]) -> Result<f64> {
    obj.check_point(x)?;
    let n = obj.dim();
    if n > MU_DIAGNOSTIC_LIMIT {
        return Err(SscnError::DiagnosticTooLarge { n, limit: MU_DIAGNOSTIC_LIMIT });
    }
    let g = DVector::from_vec(obj.grad_full(x)).norm();
    let lam = min_eigenvalue_sym(&obj.hessian_full(x));
    Ok(g.powf(1.5).max((-lam).max(0.0).powi(3)))
}

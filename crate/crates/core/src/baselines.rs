//! Comparison methods: randomized subspace coordinate descent and full-space
//! cubic regularized Newton.

use crate::error::{Result, SscnError};
use crate::model::CurvatureSource;
use crate::objectives::Objective;
use crate::optimizer::{
    drive, run, DriverOptions, DriverStep, MPolicy, OptimizerConfig, RunTrace, StopCriteria, TraceConfig,
};
use crate::subset::{CoordinateSubset, SamplingSchedule};

/// Backtracking line search for `x_S ← x_S − η ∇_S f(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoParams {
    pub eta0: f64,
    pub backtrack: f64,
    /// Sufficient decrease constant: accept when `f(x⁺) ≤ f(x) − c·η‖∇_S f‖²`.
    pub c: f64,
    pub max_backtracks: usize,
}

impl Default for ArmijoParams {
    fn default() -> Self {
        Self { eta0: 1.0, backtrack: 0.5, c: 0.5, max_backtracks: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Fixed { eta: f64 },
    Armijo(ArmijoParams),
}

impl StepRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Fixed { eta } if !(eta > 0.0 && eta.is_finite()) => {
                Err(SscnError::InvalidParameter(format!("step size {eta} must be positive")))
            }
            Self::Armijo(p) if !(p.eta0 > 0.0 && p.backtrack > 0.0 && p.backtrack < 1.0 && p.c > 0.0 && p.c < 1.0) => {
                Err(SscnError::InvalidParameter(format!("invalid Armijo parameters {p:?}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdConfig {
    pub schedule: SamplingSchedule,
    pub step: StepRule,
    pub stop: StopCriteria,
    pub seed: u64,
    pub full_grad_every: usize,
    pub record_iterates: bool,
}

impl CdConfig {
    pub fn new(schedule: SamplingSchedule) -> Self {
        Self {
            schedule,
            step: StepRule::Armijo(ArmijoParams::default()),
            stop: StopCriteria::default(),
            seed: 0,
            full_grad_every: 10,
            record_iterates: false,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.schedule.validate(n)?;
        self.step.validate()?;
        self.stop.validate()?;
        if self.full_grad_every == 0 {
            return Err(SscnError::InvalidParameter("full_grad_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of one coordinate descent step.
#[derive(Debug, Clone, PartialEq)]
pub struct CdStep {
    pub x_next: Vec<f64>,
    pub f_next: f64,
    pub f_prev: f64,
    pub grad_subset_norm: f64,
    pub eta: f64,
    pub backtracks: usize,
    pub step_norm: f64,
    pub moved: bool,
}

/// One gradient step on the coordinates of `s`.
pub fn cd_step(obj: &dyn Objective, x: &[f64], s: &CoordinateSubset, rule: &StepRule) -> Result<CdStep> {
    obj.check_point(x)?;
    obj.check_subset(s)?;
    let fx = obj.value(x);
    if !fx.is_finite() {
        return Err(SscnError::Diverged { iteration: 0 });
    }
    let g = obj.grad_subset(x, s);
    let g2: f64 = g.iter().map(|v| v * v).sum();
    let g_norm = g2.sqrt();
    let trial = |eta: f64| -> Result<(Vec<f64>, f64)> {
        let h: Vec<f64> = g.iter().map(|v| -eta * v).collect();
        let xn = s.apply_step(x, &h)?;
        let fx_n = obj.value(&xn);
        Ok((xn, fx_n))
    };
    let stay = |eta: f64, backtracks: usize| CdStep {
        x_next: x.to_vec(),
        f_next: fx,
        f_prev: fx,
        grad_subset_norm: g_norm,
        eta,
        backtracks,
        step_norm: 0.0,
        moved: false,
    };
    if g_norm == 0.0 {
        return Ok(stay(0.0, 0));
    }
    match *rule {
        StepRule::Fixed { eta } => {
            let (x_next, f_next) = trial(eta)?;
            Ok(CdStep { x_next, f_next, f_prev: fx, grad_subset_norm: g_norm, eta, backtracks: 0, step_norm: eta * g_norm, moved: true })
        }
        StepRule::Armijo(p) => {
            let mut eta = p.eta0;
            for backtracks in 0..=p.max_backtracks {
                let (x_next, f_next) = trial(eta)?;
                if f_next <= fx - p.c * eta * g2 {
                    return Ok(CdStep {
                        x_next,
                        f_next,
                        f_prev: fx,
                        grad_subset_norm: g_norm,
                        eta,
                        backtracks,
                        step_norm: eta * g_norm,
                        moved: true,
                    });
                }
                if backtracks < p.max_backtracks {
                    eta *= p.backtrack;
                }
            }
            Ok(stay(0.0, p.max_backtracks))
        }
    }
}

/// Randomized subspace coordinate descent. The `M` column of its records
/// carries the accepted step size and `m_retries` the number of backtracks.
pub fn cd_run(obj: &dyn Objective, x0: &[f64], config: &CdConfig) -> Result<RunTrace> {
    obj.check_point(x0)?;
    config.validate(obj.dim())?;
    let opts = DriverOptions {
        schedule: &config.schedule,
        stop: &config.stop,
        seed: config.seed,
        full_grad_every: config.full_grad_every,
        record_iterates: config.record_iterates,
    };
    let out = drive(obj, x0, opts, |x, s| {
        let st = cd_step(obj, x, s, &config.step)?;
        Ok(DriverStep {
            x_next: st.x_next,
            f_next: st.f_next,
            grad_subset_norm: st.grad_subset_norm,
            step_norm: st.step_norm,
            m_k: st.eta,
            m_retries: st.backtracks,
            predicted_f: st.f_next,
            curvature_norm: 0.0,
            coord_cost: s.tau() as u64,
        })
    })?;
    Ok(RunTrace {
        config: TraceConfig::CoordinateDescent(config.clone()),
        records: out.records,
        final_x: out.final_x,
        termination: out.termination,
        iterates: out.iterates,
    })
}

/// Cubic regularized Newton in the full space: `config` run with `S = [n]`
/// every iteration and the exact Hessian. Schedule and curvature settings in
/// `config` are ignored.
pub fn full_cubic_newton_run(obj: &dyn Objective, x0: &[f64], config: &OptimizerConfig) -> Result<RunTrace> {
    let cfg = OptimizerConfig {
        schedule: SamplingSchedule::Constant { tau: obj.dim() },
        curvature: CurvatureSource::ExactSubHessian,
        ..config.clone()
    };
    run(obj, x0, &cfg)
}

/// Convenience wrapper: full cubic Newton with the given `M` policy and stopping rule.
pub fn full_cubic_newton(obj: &dyn Objective, x0: &[f64], m_policy: MPolicy, stop: StopCriteria) -> Result<RunTrace> {
    let mut cfg = OptimizerConfig::new(SamplingSchedule::Constant { tau: obj.dim() });
    cfg.m_policy = m_policy;
    cfg.stop = stop;
    full_cubic_newton_run(obj, x0, &cfg)
}

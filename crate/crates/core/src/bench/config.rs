//! Experiment configuration files.
//!
//! Configs are TOML: an `[objective]` table, optional `[stop]` and `[run]`
//! tables, and one `[[method]]` table per method. Unknown keys are rejected.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::baselines::{ArmijoParams, CdConfig, StepRule};
use crate::data_io::{load_libsvm, resolve_dataset_path, SparseDataset};
use crate::model::CurvatureSource;
use crate::objectives::{estimate_hessian_lipschitz, Objective, Quadratic, RegularizedLogistic, SaddleQuartic};
use crate::optimizer::{MPolicy, OptimizerConfig, StopCriteria};
use crate::subproblem::DEFAULT_TOL;
use crate::subset::{AdaptiveParams, SamplingSchedule};

/// Schema version understood by this binary.
pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub objective: ObjectiveConfig,
    #[serde(default)]
    pub stop: StopConfig,
    #[serde(default)]
    pub run: RunOptions,
    #[serde(default, rename = "method")]
    pub methods: Vec<MethodConfig>,
}

fn default_version() -> u32 {
    CONFIG_VERSION
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    /// LIBSVM file resolved against the data directory.
    Logistic,
    SyntheticLogistic,
    Quadratic,
    SaddleQuartic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub kind: ObjectiveKind,
    #[serde(default)]
    pub dataset: Option<String>,
    #[serde(default)]
    pub n_features: Option<usize>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_true")]
    pub normalize: bool,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub features: Option<usize>,
    #[serde(default)]
    pub density: Option<f64>,
    #[serde(default)]
    pub data_seed: Option<u64>,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub eig_min: Option<f64>,
    #[serde(default)]
    pub eig_max: Option<f64>,
    #[serde(default)]
    pub scale: Option<f64>,
    /// Explicit starting point; the origin when absent.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    /// Starting point with every coordinate equal to this value.
    #[serde(default)]
    pub x0_fill: Option<f64>,
}

fn default_lambda() -> f64 {
    0.1
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopConfig {
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub max_seconds: Option<f64>,
}

fn default_grad_tol() -> f64 {
    1e-6
}

fn default_max_iters() -> usize {
    1000
}

impl Default for StopConfig {
    fn default() -> Self {
        Self { grad_tol: default_grad_tol(), max_iters: default_max_iters(), max_seconds: None }
    }
}

impl StopConfig {
    pub fn criteria(&self) -> StopCriteria {
        StopCriteria { grad_tol: self.grad_tol, max_iters: self.max_iters, max_seconds: self.max_seconds }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_full_grad_every")]
    pub full_grad_every: usize,
    /// Write measured wall time; when off the elapsed column is zero and
    /// repeated runs produce byte-identical traces.
    #[serde(default = "default_true")]
    pub record_timing: bool,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_full_grad_every() -> usize {
    10
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { seeds: default_seeds(), full_grad_every: default_full_grad_every(), record_timing: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Sscn,
    Cd,
    /// Full-space cubic regularized Newton.
    Cr,
}

impl MethodKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Sscn => "sscn",
            Self::Cd => "cd",
            Self::Cr => "cr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    #[default]
    Constant,
    Exponential,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureKind {
    #[default]
    Exact,
    Zero,
    Lazy,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MPolicyKind {
    #[default]
    Adaptive,
    Fixed,
    Theory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    #[default]
    Armijo,
    Fixed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub kind: MethodKind,
    #[serde(default)]
    pub label: Option<String>,

    #[serde(default)]
    pub schedule: ScheduleKind,
    #[serde(default)]
    pub tau: Option<usize>,
    /// Subset size as a fraction of the dimension, rounded up.
    #[serde(default)]
    pub tau_fraction: Option<f64>,
    #[serde(default)]
    pub tau0: Option<f64>,
    #[serde(default)]
    pub c_e: Option<f64>,
    #[serde(default)]
    pub d: Option<f64>,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub ema_alpha: Option<f64>,
    #[serde(default)]
    pub smooth_beta: Option<f64>,
    #[serde(default)]
    pub tau_min: Option<usize>,

    #[serde(default)]
    pub curvature: CurvatureKind,
    #[serde(default)]
    pub lazy_period: Option<usize>,
    #[serde(default)]
    pub lazy_radius: Option<f64>,
    #[serde(default)]
    pub fd_delta: Option<f64>,

    #[serde(default)]
    pub m_policy: MPolicyKind,
    #[serde(default)]
    pub m: Option<f64>,
    #[serde(default)]
    pub m0: Option<f64>,
    #[serde(default)]
    pub grow: Option<f64>,
    #[serde(default)]
    pub shrink: Option<f64>,
    #[serde(default)]
    pub m_min: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub l1: Option<f64>,
    #[serde(default)]
    pub l2: Option<f64>,
    #[serde(default)]
    pub subproblem_tol: Option<f64>,

    #[serde(default)]
    pub step: StepKind,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub eta0: Option<f64>,
    #[serde(default)]
    pub backtrack: Option<f64>,
    #[serde(default)]
    pub armijo_c: Option<f64>,
    #[serde(default)]
    pub max_backtracks: Option<usize>,
}

/// Fully resolved method, ready to run for a given seed.
#[derive(Debug, Clone)]
pub enum MethodPlan {
    Sscn(OptimizerConfig),
    Cd(CdConfig),
}

impl MethodPlan {
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            Self::Sscn(c) => Self::Sscn(OptimizerConfig { seed, ..c.clone() }),
            Self::Cd(c) => Self::Cd(CdConfig { seed, ..c.clone() }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResolvedMethod {
    pub label: String,
    pub kind: MethodKind,
    pub schedule_label: String,
    pub plan: MethodPlan,
}

/// An objective together with its starting point.
pub struct Problem {
    pub objective: Box<dyn Objective + Send>,
    pub x0: Vec<f64>,
}

fn config_err(msg: impl Into<String>) -> BenchError {
    BenchError::Config(msg.into())
}

fn require<T>(v: Option<T>, what: &str, kind: &str) -> Result<T, BenchError> {
    v.ok_or_else(|| config_err(format!("objective kind {kind} requires `{what}`")))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, BenchError> {
        let cfg: Self = toml::from_str(text)?;
        if cfg.version != CONFIG_VERSION {
            return Err(config_err(format!("unsupported config version {} (expected {CONFIG_VERSION})", cfg.version)));
        }
        if cfg.run.seeds.is_empty() {
            return Err(config_err("run.seeds must not be empty"));
        }
        if cfg.methods.is_empty() {
            return Err(config_err("at least one [[method]] block is required"));
        }
        if cfg.run.full_grad_every == 0 {
            return Err(config_err("run.full_grad_every must be at least 1"));
        }
        cfg.stop.criteria().validate().map_err(|e| config_err(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn build_problem(&self) -> Result<Problem, BenchError> {
        let o = &self.objective;
        let objective: Box<dyn Objective + Send> = match o.kind {
            ObjectiveKind::Logistic => {
                let name = require(o.dataset.as_deref(), "dataset", "logistic")?;
                let path = resolve_dataset_path(name);
                if !path.is_file() {
                    return Err(BenchError::MissingDataset(path));
                }
                let data = load_libsvm(&path, o.n_features).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
                Box::new(RegularizedLogistic::new(data, o.lambda, o.normalize).map_err(|e| config_err(e.to_string()))?)
            }
            ObjectiveKind::SyntheticLogistic => {
                let kind = "synthetic_logistic";
                let data = SparseDataset::synthetic(
                    require(o.samples, "samples", kind)?,
                    require(o.features, "features", kind)?,
                    o.density.unwrap_or(1.0),
                    o.data_seed.unwrap_or(0),
                )
                .map_err(|e| config_err(e.to_string()))?;
                Box::new(RegularizedLogistic::new(data, o.lambda, o.normalize).map_err(|e| config_err(e.to_string()))?)
            }
            ObjectiveKind::Quadratic => {
                let dim = require(o.dim, "dim", "quadratic")?;
                let (lo, hi) = (o.eig_min.unwrap_or(1.0), o.eig_max.unwrap_or(10.0));
                if dim == 0 || !(lo > 0.0 && hi >= lo) {
                    return Err(config_err("quadratic needs dim >= 1 and 0 < eig_min <= eig_max"));
                }
                let (a, b) = random_quadratic(dim, lo, hi, o.data_seed.unwrap_or(0));
                Box::new(Quadratic::new(a, b).map_err(|e| config_err(e.to_string()))?)
            }
            ObjectiveKind::SaddleQuartic => Box::new(
                SaddleQuartic::new(require(o.dim, "dim", "saddle_quartic")?, o.scale.unwrap_or(0.25))
                    .map_err(|e| config_err(e.to_string()))?,
            ),
        };
        let n = objective.dim();
        let x0 = match (&o.x0, o.x0_fill) {
            (Some(_), Some(_)) => return Err(config_err("set at most one of objective.x0 and objective.x0_fill")),
            (Some(x), None) if x.len() != n => {
                return Err(config_err(format!("objective.x0 has length {}, dimension is {n}", x.len())))
            }
            (Some(x), None) => x.clone(),
            (None, Some(v)) => vec![v; n],
            (None, None) => vec![0.0; n],
        };
        Ok(Problem { objective, x0 })
    }

    /// Resolves every method block against the objective, assigning unique labels.
    pub fn resolve_methods(&self, obj: &dyn Objective) -> Result<Vec<ResolvedMethod>, BenchError> {
        let mut out = Vec::with_capacity(self.methods.len());
        for m in &self.methods {
            out.push(resolve_method(m, obj, &self.stop, &self.run)?);
        }
        let count = |label: &str, v: &[ResolvedMethod]| v.iter().filter(|r| r.label == label).count();
        let snapshot = out.clone();
        for (r, m) in out.iter_mut().zip(&self.methods) {
            if m.label.is_none() && count(&r.label, &snapshot) > 1 {
                r.label = format!("{}-{}", r.kind.as_str(), r.schedule_label);
            }
        }
        for r in &out {
            if count(&r.label, &out) > 1 {
                return Err(config_err(format!("duplicate method label {:?}; set `label` on the method blocks", r.label)));
            }
        }
        Ok(out)
    }
}

fn random_quadratic(dim: usize, lo: f64, hi: f64, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::<f64>::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut rng));
    let u = g.qr().q();
    let spectrum = DVector::from_fn(dim, |i, _| {
        if dim == 1 {
            lo
        } else {
            lo * (hi / lo).powf(i as f64 / (dim - 1) as f64)
        }
    });
    let a: DMatrix<f64> = &u * DMatrix::from_diagonal(&spectrum) * u.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let b = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    (a, b)
}

fn resolve_tau(m: &MethodConfig, n: usize) -> Result<usize, BenchError> {
    match (m.tau, m.tau_fraction) {
        (Some(_), Some(_)) => Err(config_err("set at most one of tau and tau_fraction")),
        (Some(t), None) => Ok(t),
        (None, Some(f)) if f > 0.0 && f <= 1.0 => Ok(((n as f64 * f).ceil() as usize).clamp(1, n)),
        (None, Some(f)) => Err(config_err(format!("tau_fraction = {f} must lie in (0, 1]"))),
        (None, None) => Err(config_err("constant schedules need tau or tau_fraction")),
    }
}

fn resolve_schedule(m: &MethodConfig, n: usize) -> Result<(SamplingSchedule, String), BenchError> {
    if m.kind == MethodKind::Cr {
        return Ok((SamplingSchedule::Constant { tau: n }, format!("constant(tau={n})")));
    }
    let (schedule, label) = match m.schedule {
        ScheduleKind::Constant => {
            let tau = resolve_tau(m, n)?;
            (SamplingSchedule::Constant { tau }, format!("constant(tau={tau})"))
        }
        ScheduleKind::Exponential => {
            let tau0 = m.tau0.unwrap_or(1.0);
            let c_e = m.c_e.unwrap_or(1.0);
            let d = m.d.unwrap_or(0.05);
            (SamplingSchedule::Exponential { tau0, c_e, d }, format!("exponential(tau0={tau0},c_e={c_e},d={d})"))
        }
        ScheduleKind::Adaptive => {
            let def = AdaptiveParams::default();
            let p = AdaptiveParams {
                c: m.c.unwrap_or(def.c),
                ema_alpha: m.ema_alpha.unwrap_or(def.ema_alpha),
                smooth_beta: m.smooth_beta.unwrap_or(def.smooth_beta),
                tau_min: m.tau_min.unwrap_or(def.tau_min),
            };
            (SamplingSchedule::Adaptive(p), format!("adaptive(c={})", p.c))
        }
    };
    schedule.validate(n).map_err(|e| config_err(e.to_string()))?;
    Ok((schedule, label))
}

fn resolve_curvature(m: &MethodConfig) -> CurvatureSource {
    match m.curvature {
        CurvatureKind::Exact => CurvatureSource::ExactSubHessian,
        CurvatureKind::Zero => CurvatureSource::Zero,
        CurvatureKind::Lazy => CurvatureSource::Lazy { period: m.lazy_period.unwrap_or(10), radius: m.lazy_radius },
        CurvatureKind::FiniteDifference => CurvatureSource::FiniteDifference { delta: m.fd_delta },
    }
}

fn resolve_m_policy(m: &MethodConfig, obj: &dyn Objective, curvature: CurvatureSource) -> Result<MPolicy, BenchError> {
    Ok(match m.m_policy {
        MPolicyKind::Fixed => MPolicy::Fixed { m: m.m.ok_or_else(|| config_err("m_policy = \"fixed\" requires `m`"))? },
        MPolicyKind::Adaptive => {
            let MPolicy::AdaptiveDoubling { m0, grow, shrink, m_min } = MPolicy::default() else { unreachable!() };
            MPolicy::AdaptiveDoubling {
                m0: m.m0.unwrap_or(m0),
                grow: m.grow.unwrap_or(grow),
                shrink: m.shrink.unwrap_or(shrink),
                m_min: m.m_min.unwrap_or(m_min),
            }
        }
        MPolicyKind::Theory => {
            let lip = obj.lipschitz();
            let l1 = m.l1.or(lip.l1).ok_or_else(|| config_err("theory rule needs `l1` for this objective"))?;
            let l2 = match m.l2.or(lip.l2) {
                Some(v) => v,
                None => estimate_hessian_lipschitz(obj, 1.0, 20, obj.dim().min(10), 0),
            };
            let sigma = match (m.sigma, curvature) {
                (Some(s), _) => s,
                (None, CurvatureSource::ExactSubHessian) => 0.0,
                (None, CurvatureSource::Zero) => l1,
                (None, CurvatureSource::FiniteDifference { delta }) => l2 * delta.unwrap_or(1e-4),
                (None, CurvatureSource::Lazy { .. }) => {
                    return Err(config_err("theory rule with lazy curvature requires an explicit `sigma`"))
                }
            };
            MPolicy::TheoryRule { sigma, l1, l2 }
        }
    })
}

fn resolve_method(m: &MethodConfig, obj: &dyn Objective, stop: &StopConfig, run: &RunOptions) -> Result<ResolvedMethod, BenchError> {
    let n = obj.dim();
    let (schedule, schedule_label) = resolve_schedule(m, n)?;
    let plan = match m.kind {
        MethodKind::Sscn | MethodKind::Cr => {
            let curvature = if m.kind == MethodKind::Cr { CurvatureSource::ExactSubHessian } else { resolve_curvature(m) };
            let mut cfg = OptimizerConfig::new(schedule);
            cfg.curvature = curvature;
            cfg.m_policy = resolve_m_policy(m, obj, curvature)?;
            cfg.subproblem_tol = m.subproblem_tol.unwrap_or(DEFAULT_TOL);
            cfg.stop = stop.criteria();
            cfg.full_grad_every = run.full_grad_every;
            cfg.validate(n).map_err(|e| config_err(e.to_string()))?;
            MethodPlan::Sscn(cfg)
        }
        MethodKind::Cd => {
            let mut cfg = CdConfig::new(schedule);
            cfg.step = match m.step {
                StepKind::Fixed => StepRule::Fixed { eta: m.eta.ok_or_else(|| config_err("step = \"fixed\" requires `eta`"))? },
                StepKind::Armijo => {
                    let d = ArmijoParams::default();
                    StepRule::Armijo(ArmijoParams {
                        eta0: m.eta0.unwrap_or(d.eta0),
                        backtrack: m.backtrack.unwrap_or(d.backtrack),
                        c: m.armijo_c.unwrap_or(d.c),
                        max_backtracks: m.max_backtracks.unwrap_or(d.max_backtracks),
                    })
                }
            };
            cfg.stop = stop.criteria();
            cfg.full_grad_every = run.full_grad_every;
            cfg.validate(n).map_err(|e| config_err(e.to_string()))?;
            MethodPlan::Cd(cfg)
        }
    };
    Ok(ResolvedMethod { label: m.label.clone().unwrap_or_else(|| m.kind.as_str().to_string()), kind: m.kind, schedule_label, plan })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
        [objective]
        kind = "quadratic"
        dim = 4

        [[method]]
        kind = "sscn"
        tau = 2
    "#;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_toml_str(BASIC).unwrap();
        assert_eq!(cfg.run.seeds, vec![0]);
        let p = cfg.build_problem().unwrap();
        assert_eq!(p.x0, vec![0.0; 4]);
        let methods = cfg.resolve_methods(p.objective.as_ref()).unwrap();
        assert_eq!(methods[0].label, "sscn");
        assert_eq!(methods[0].schedule_label, "constant(tau=2)");
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = format!("{BASIC}\nbogus = 1\n");
        assert!(matches!(ExperimentConfig::from_toml_str(&text), Err(BenchError::Config(_) | BenchError::Toml(_))));
    }

    #[test]
    fn rejects_empty_methods_and_seeds() {
        let text = "[objective]\nkind = \"quadratic\"\ndim = 2\n";
        assert!(ExperimentConfig::from_toml_str(text).is_err());
        let text = format!("{BASIC}\n[run]\nseeds = []\n");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn missing_dataset_is_reported() {
        let text = r#"
            [objective]
            kind = "logistic"
            dataset = "/nonexistent/definitely-missing.libsvm"
            [[method]]
            kind = "cd"
            tau = 1
        "#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert!(matches!(cfg.build_problem(), Err(BenchError::MissingDataset(_))));
    }

    #[test]
    fn duplicate_kinds_get_schedule_labels() {
        let text = r#"
            [objective]
            kind = "saddle_quartic"
            dim = 10
            [[method]]
            kind = "sscn"
            tau_fraction = 0.2
            [[method]]
            kind = "sscn"
            tau = 10
        "#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        let p = cfg.build_problem().unwrap();
        let m = cfg.resolve_methods(p.objective.as_ref()).unwrap();
        assert_eq!(m[0].label, "sscn-constant(tau=2)");
        assert_eq!(m[1].label, "sscn-constant(tau=10)");
    }

    #[test]
    fn random_quadratic_has_requested_spectrum() {
        let (a, _) = random_quadratic(5, 1.0, 16.0, 3);
        let eig = a.symmetric_eigenvalues();
        let (lo, hi) = eig.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        assert!((lo - 1.0).abs() < 1e-10 && (hi - 16.0).abs() < 1e-9);
    }

    #[test]
    fn lambda_echo() {
        let text = r#"
            [objective]
            kind = "synthetic_logistic"
            samples = 20
            features = 5
            lambda = 0.1
            [[method]]
            kind = "cr"
        "#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        let json = serde_json::to_value(&cfg).unwrap();
        assert_eq!(json["objective"]["lambda"], 0.1);
    }
}

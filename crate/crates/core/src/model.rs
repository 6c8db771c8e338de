//! The τ-dimensional cubic-regularized model and its curvature providers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SscnError};
use crate::objectives::Objective;
use crate::subset::CoordinateSubset;

/// Source of the curvature block `Q_S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurvatureSource {
    /// `Q_S = ∇²f(x)|_S`.
    ExactSubHessian,
    /// `Q_S = 0`; the step reduces to a scaled coordinate-gradient step.
    Zero,
    /// `Q_S = ∇²f(x_t)|_S` at an anchor refreshed every `period` iterations
    /// or when the iterate leaves the ball of `radius` around it.
    Lazy { period: usize, radius: Option<f64> },
    /// Forward differences of the restricted gradient, symmetrized.
    /// `delta: None` picks `1e−4·(1 + ‖x‖∞)`.
    FiniteDifference { delta: Option<f64> },
}

impl CurvatureSource {
    pub fn lazy(period: usize) -> Self {
        Self::Lazy { period, radius: None }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Lazy { period: 0, .. } => Err(SscnError::InvalidParameter("lazy period must be at least 1".into())),
            Self::Lazy { radius: Some(r), .. } if !(r > 0.0) => {
                Err(SscnError::InvalidParameter(format!("lazy refresh radius {r} must be positive")))
            }
            Self::FiniteDifference { delta: Some(d) } if !(d > 0.0) => {
                Err(SscnError::InvalidParameter(format!("finite-difference delta {d} must be positive")))
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::ExactSubHessian => "exact".into(),
            Self::Zero => "zero".into(),
            Self::Lazy { period, .. } => format!("lazy{period}"),
            Self::FiniteDifference { .. } => "fd".into(),
        }
    }
}

/// Anchor point for lazy curvature.
#[derive(Debug, Clone, Default)]
pub struct LazyCache {
    anchor: Option<Vec<f64>>,
    since_refresh: usize,
    refreshes: usize,
}

impl LazyCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn anchor(&self) -> Option<&[f64]> {
        self.anchor.as_deref()
    }

    /// Number of times the anchor has been (re)set.
    pub fn refreshes(&self) -> usize {
        self.refreshes
    }

    /// Advances one iteration and returns the anchor to evaluate curvature at.
    fn anchor_for(&mut self, x: &[f64], period: usize, radius: Option<f64>) -> &[f64] {
        let stale = match &self.anchor {
            None => true,
            Some(a) => {
                let far = radius.is_some_and(|r| dist(a, x) > r);
                self.since_refresh >= period || far
            }
        };
        if stale {
            self.anchor = Some(x.to_vec());
            self.since_refresh = 0;
            self.refreshes += 1;
        }
        self.since_refresh += 1;
        self.anchor.as_deref().expect("anchor set above")
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

/// `m(h) = f + ⟨g, h⟩ + ½⟨Qh, h⟩ + (M/6)‖h‖³` over the sampled coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicModel {
    pub f_at_x: f64,
    pub g: DVector<f64>,
    pub q: DMatrix<f64>,
    pub m: f64,
    pub subset: CoordinateSubset,
    /// Bound on `‖∇²f(x)|_S − Q_S‖`, when one is known.
    pub sigma_bound: Option<f64>,
}

impl CubicModel {
    /// Builds a model directly from its parts; `q` is symmetrized.
    pub fn new(f_at_x: f64, g: Vec<f64>, q: DMatrix<f64>, m: f64, subset: CoordinateSubset) -> Result<Self> {
        let tau = subset.tau();
        if g.len() != tau {
            return Err(SscnError::DimensionMismatch { expected: tau, got: g.len() });
        }
        if q.nrows() != tau || q.ncols() != tau {
            return Err(SscnError::DimensionMismatch { expected: tau, got: q.nrows() });
        }
        check_m(m)?;
        Ok(Self { f_at_x, g: DVector::from_vec(g), q: symmetrize(&q), m, subset, sigma_bound: None })
    }

    /// A standalone model over `[τ]`, used by tests and the subproblem tools.
    pub fn from_parts(g: Vec<f64>, q: DMatrix<f64>, m: f64) -> Result<Self> {
        let tau = g.len();
        if tau == 0 {
            return Err(SscnError::DimensionMismatch { expected: 1, got: 0 });
        }
        Self::new(0.0, g, q, m, CoordinateSubset::full(tau))
    }

    pub fn tau(&self) -> usize {
        self.g.len()
    }

    /// Same model with a different regularization weight.
    pub fn with_m(&self, m: f64) -> Result<Self> {
        check_m(m)?;
        Ok(Self { m, ..self.clone() })
    }

    pub fn value(&self, h: &[f64]) -> Result<f64> {
        model_value(self, h)
    }

    pub fn gradient(&self, h: &[f64]) -> Result<Vec<f64>> {
        model_gradient(self, h)
    }
}

fn check_m(m: f64) -> Result<()> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(SscnError::InvalidParameter(format!("regularization weight M = {m} must be positive and finite")));
    }
    Ok(())
}

/// `(Q + Qᵀ)/2`.
pub fn symmetrize(q: &DMatrix<f64>) -> DMatrix<f64> {
    (q + q.transpose()) * 0.5
}

pub fn model_value(m: &CubicModel, h: &[f64]) -> Result<f64> {
    if h.len() != m.tau() {
        return Err(SscnError::DimensionMismatch { expected: m.tau(), got: h.len() });
    }
    let hv = DVector::from_column_slice(h);
    let norm = hv.norm();
    Ok(m.f_at_x + m.g.dot(&hv) + 0.5 * (&m.q * &hv).dot(&hv) + m.m / 6.0 * norm * norm * norm)
}

/// `g + Qh + (M/2)‖h‖h`.
pub fn model_gradient(m: &CubicModel, h: &[f64]) -> Result<Vec<f64>> {
    if h.len() != m.tau() {
        return Err(SscnError::DimensionMismatch { expected: m.tau(), got: h.len() });
    }
    let hv = DVector::from_column_slice(h);
    let grad = &m.g + &m.q * &hv + &hv * (0.5 * m.m * hv.norm());
    Ok(grad.as_slice().to_vec())
}

/// Assembles the model at `x` for the sampled subset.
pub fn build_model(
    obj: &dyn Objective,
    x: &[f64],
    s: &CoordinateSubset,
    source: CurvatureSource,
    m: f64,
    lazy_cache: Option<&mut LazyCache>,
) -> Result<CubicModel> {
    obj.check_point(x)?;
    let fx = obj.value(x);
    let g = obj.grad_subset(x, s);
    build_model_from_parts(obj, x, fx, g, s, source, m, lazy_cache)
}

/// Like [`build_model`] with `f(x)` and `∇f(x)|_S` already evaluated.
#[allow(clippy::too_many_arguments)]
pub fn build_model_from_parts(
    obj: &dyn Objective,
    x: &[f64],
    fx: f64,
    g: Vec<f64>,
    s: &CoordinateSubset,
    source: CurvatureSource,
    m: f64,
    lazy_cache: Option<&mut LazyCache>,
) -> Result<CubicModel> {
    obj.check_point(x)?;
    obj.check_subset(s)?;
    source.validate()?;
    check_m(m)?;
    let tau = s.tau();
    let lip = obj.lipschitz();
    let (q, sigma) = match source {
        CurvatureSource::ExactSubHessian => (obj.hessian_block(x, s), Some(0.0)),
        CurvatureSource::Zero => (DMatrix::zeros(tau, tau), lip.l1),
        CurvatureSource::Lazy { period, radius } => {
            let cache = lazy_cache.ok_or(SscnError::LazyCacheMissing)?;
            let anchor = cache.anchor_for(x, period, radius);
            let drift = dist(anchor, x);
            (obj.hessian_block(anchor, s), lip.l2.map(|l2| l2 * drift))
        }
        CurvatureSource::FiniteDifference { delta } => {
            let delta = delta.unwrap_or_else(|| default_fd_delta(x));
            let mut q = DMatrix::zeros(tau, tau);
            let mut probe = x.to_vec();
            for (row, &i) in s.indices().iter().enumerate() {
                probe[i] = x[i] + delta;
                let gp = obj.grad_subset(&probe, s);
                probe[i] = x[i];
                for col in 0..tau {
                    q[(row, col)] = (gp[col] - g[col]) / delta;
                }
            }
            (symmetrize(&q), lip.l2.map(|l2| l2 * delta))
        }
    };
    if q.iter().any(|v| !v.is_finite()) {
        return Err(SscnError::NonFiniteCurvature);
    }
    let mut model = CubicModel::new(fx, g, q, m, s.clone())?;
    model.sigma_bound = sigma;
    Ok(model)
}

/// `1e−4·(1 + ‖x‖∞)`.
pub fn default_fd_delta(x: &[f64]) -> f64 {
    1e-4 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

use nalgebra::DMatrix;

use super::{spectral_norm_sym, Lipschitz, Objective};
use crate::error::{Result, SscnError};
use crate::subset::CoordinateSubset;

/// `f(x) = ½⟨Ax, x⟩ + ⟨b, x⟩` with symmetric `A`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    a: DMatrix<f64>,
    b: Vec<f64>,
    l1: f64,
}

impl Quadratic {
    pub fn new(a: DMatrix<f64>, b: Vec<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.len() != n || n == 0 {
            return Err(SscnError::DimensionMismatch { expected: n, got: b.len() });
        }
        if (&a - a.transpose()).amax() > 1e-12 * (1.0 + a.amax()) {
            return Err(SscnError::InvalidParameter("quadratic matrix must be symmetric".into()));
        }
        let l1 = spectral_norm_sym(&a);
        Ok(Self { a, b, l1 })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn linear(&self) -> &[f64] {
        &self.b
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut v = 0.0;
        for i in 0..n {
            let row: f64 = x.iter().enumerate().map(|(j, xj)| self.a[(i, j)] * xj).sum();
            v += x[i] * (0.5 * row + self.b[i]);
        }
        v
    }

    fn grad_full(&self, x: &[f64]) -> Vec<f64> {
        self.grad_subset(x, &CoordinateSubset::full(self.dim()))
    }

    fn grad_subset(&self, x: &[f64], s: &CoordinateSubset) -> Vec<f64> {
        s.indices()
            .iter()
            .map(|&i| (0..self.dim()).map(|j| self.a[(i, j)] * x[j]).sum::<f64>() + self.b[i])
            .collect()
    }

    fn hessian_block(&self, _x: &[f64], s: &CoordinateSubset) -> DMatrix<f64> {
        let idx = s.indices();
        DMatrix::from_fn(idx.len(), idx.len(), |p, q| self.a[(idx[p], idx[q])])
    }

    fn lipschitz(&self) -> Lipschitz {
        Lipschitz { l1: Some(self.l1), l2: Some(0.0) }
    }
}

/// `f(x) = x₁² − x₂² + s·‖x‖⁴`, a strict saddle at the origin with
/// `λ_min(∇²f(0)) = −2`. Minimizers sit at `x₂ = ±1/sqrt(2s)`, other coordinates zero.
#[derive(Debug, Clone, Copy)]
pub struct SaddleQuartic {
    n: usize,
    scale: f64,
}

impl SaddleQuartic {
    pub fn new(n: usize, scale: f64) -> Result<Self> {
        if n < 2 {
            return Err(SscnError::InvalidParameter("saddle quartic needs n >= 2".into()));
        }
        if !(scale > 0.0) {
            return Err(SscnError::InvalidParameter(format!("quartic scale {scale} must be positive")));
        }
        Ok(Self { n, scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn quadratic_coeff(i: usize) -> f64 {
        match i {
            0 => 2.0,
            1 => -2.0,
            _ => 0.0,
        }
    }
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

impl Objective for SaddleQuartic {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r2 = norm_sq(x);
        x[0] * x[0] - x[1] * x[1] + self.scale * r2 * r2
    }

    fn grad_full(&self, x: &[f64]) -> Vec<f64> {
        self.grad_subset(x, &CoordinateSubset::full(self.n))
    }

    fn grad_subset(&self, x: &[f64], s: &CoordinateSubset) -> Vec<f64> {
        let r2 = norm_sq(x);
        s.indices().iter().map(|&i| Self::quadratic_coeff(i) * x[i] + 4.0 * self.scale * r2 * x[i]).collect()
    }

    fn hessian_block(&self, x: &[f64], s: &CoordinateSubset) -> DMatrix<f64> {
        let r2 = norm_sq(x);
        let idx = s.indices();
        DMatrix::from_fn(idx.len(), idx.len(), |p, q| {
            let (i, j) = (idx[p], idx[q]);
            let mut v = 8.0 * self.scale * x[i] * x[j];
            if i == j {
                v += Self::quadratic_coeff(i) + 4.0 * self.scale * r2;
            }
            v
        })
    }
}

//! Twice-differentiable objectives with coordinate-restricted derivative oracles.

mod logistic;
mod synthetic;

pub use logistic::RegularizedLogistic;
pub use synthetic::{Quadratic, SaddleQuartic};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SscnError};
use crate::subset::{sample_uniform, CoordinateSubset};

/// Optional global Lipschitz constants of the gradient (`l1`) and Hessian (`l2`).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Lipschitz {
    pub l1: Option<f64>,
    pub l2: Option<f64>,
}

/// Function value and derivative oracles.
///
/// Methods assume `x.len() == self.dim()` and that subsets live in the same
/// ambient dimension; entry points check this once with [`Objective::check_point`].
/// Restricted oracles should only do work proportional to the sampled block.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn grad_full(&self, x: &[f64]) -> Vec<f64>;

    /// `∇f(x)|_S`; must equal the `S` entries of [`Objective::grad_full`] exactly.
    fn grad_subset(&self, x: &[f64], s: &CoordinateSubset) -> Vec<f64>;

    /// Symmetric `τ×τ` block `∇²f(x)|_S`.
    fn hessian_block(&self, x: &[f64], s: &CoordinateSubset) -> DMatrix<f64>;

    /// Dense `n×n` Hessian, for diagnostics on small problems.
    fn hessian_full(&self, x: &[f64]) -> DMatrix<f64> {
        self.hessian_block(x, &CoordinateSubset::full(self.dim()))
    }

    fn lipschitz(&self) -> Lipschitz {
        Lipschitz::default()
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(SscnError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    fn check_subset(&self, s: &CoordinateSubset) -> Result<()> {
        if s.ambient_dim() != self.dim() {
            return Err(SscnError::InvalidSubset(format!(
                "subset lives in dimension {}, objective in {}",
                s.ambient_dim(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Max-norm discrepancies between analytic and central-difference derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdReport {
    pub grad_err: f64,
    pub hess_err: f64,
    /// Largest magnitude in the analytic gradient block.
    pub grad_scale: f64,
    /// Largest magnitude in the analytic Hessian block.
    pub hess_scale: f64,
}

impl FdReport {
    pub fn grad_rel(&self) -> f64 {
        self.grad_err / self.grad_scale.max(1.0)
    }

    pub fn hess_rel(&self) -> f64 {
        self.hess_err / self.hess_scale.max(1.0)
    }
}

/// Compares `grad_subset` against central differences of `value`, and
/// `hessian_block` against central differences of `grad_subset`, on `S`.
pub fn finite_diff_check(obj: &dyn Objective, x: &[f64], s: &CoordinateSubset, delta: f64) -> Result<FdReport> {
    obj.check_point(x)?;
    obj.check_subset(s)?;
    if !(delta > 0.0) {
        return Err(SscnError::InvalidParameter(format!("finite-difference step {delta} must be positive")));
    }
    let g = obj.grad_subset(x, s);
    let h = obj.hessian_block(x, s);
    let mut xp = x.to_vec();
    let mut grad_err = 0.0f64;
    let mut hess_err = 0.0f64;
    for (a, &j) in s.indices().iter().enumerate() {
        let orig = xp[j];
        xp[j] = orig + delta;
        let fp = obj.value(&xp);
        let gp = obj.grad_subset(&xp, s);
        xp[j] = orig - delta;
        let fm = obj.value(&xp);
        let gm = obj.grad_subset(&xp, s);
        xp[j] = orig;

        grad_err = grad_err.max(((fp - fm) / (2.0 * delta) - g[a]).abs());
        for b in 0..s.tau() {
            let fd = (gp[b] - gm[b]) / (2.0 * delta);
            hess_err = hess_err.max((fd - h[(b, a)]).abs());
        }
    }
    Ok(FdReport {
        grad_err,
        hess_err,
        grad_scale: g.iter().fold(0.0, |m, v| m.max(v.abs())),
        hess_scale: h.iter().fold(0.0, |m, v| m.max(v.abs())),
    })
}

/// Empirical Hessian-Lipschitz estimate: the largest observed
/// `‖∇²f(x)|_S − ∇²f(y)|_S‖₂ / ‖x − y‖` over `pairs` random pairs, doubled.
///
/// Points are drawn from `[−radius, radius]ⁿ`, partners differ on a random
/// block of at most `block` coordinates at distances spread over
/// `[1e−3, 1]·radius`. Blocks keep the cost independent of `n`.
pub fn estimate_hessian_lipschitz(obj: &dyn Objective, radius: f64, pairs: usize, block: usize, seed: u64) -> f64 {
    let n = obj.dim();
    let tau = block.clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for p in 0..pairs {
        let s = sample_uniform(n, tau, &mut rng).expect("tau clamped to [1, n]");
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-radius..=radius)).collect();
        let scale = radius * 10f64.powf(-3.0 * (p % 4) as f64 / 3.0);
        let dir: Vec<f64> = (0..tau).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let step: Vec<f64> = dir.iter().map(|v| v * scale / norm).collect();
        let y = s.apply_step(&x, &step).expect("dimensions agree");
        let diff = obj.hessian_block(&x, &s) - obj.hessian_block(&y, &s);
        let dist = step.iter().map(|v| v * v).sum::<f64>().sqrt();
        if dist > 0.0 {
            best = best.max(spectral_norm_sym(&diff) / dist);
        }
    }
    2.0 * best
}

/// Spectral norm of a symmetric matrix.
pub fn spectral_norm_sym(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone().symmetric_eigenvalues().iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue_sym(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::SparseDataset;

    #[test]
    fn quadratic_fd_is_exact() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, -1.0, 0.5, -1.0, 2.0]);
        let q = Quadratic::new(a, vec![1.0, -2.0, 0.5]).unwrap();
        let x = [0.3, -0.7, 1.1];
        let r = finite_diff_check(&q, &x, &CoordinateSubset::full(3), 1e-5).unwrap();
        let gnorm = q.grad_full(&x).iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(r.grad_err <= 1e-8 * (1.0 + gnorm), "{r:?}");
        assert!(r.hess_err <= 1e-8, "{r:?}");
    }

    #[test]
    fn logistic_fd_small_relative_error() {
        let d = SparseDataset::synthetic(40, 8, 0.7, 3).unwrap();
        let obj = RegularizedLogistic::new(d, 0.1, true).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let x: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s = sample_uniform(8, 5, &mut rng).unwrap();
            let r = finite_diff_check(&obj, &x, &s, 1e-5).unwrap();
            assert!(r.grad_rel() <= 1e-6, "{r:?}");
            assert!(r.hess_rel() <= 1e-4, "{r:?}");
        }
    }

    #[test]
    fn saddle_hessian_at_origin() {
        let f = SaddleQuartic::new(4, 0.25).unwrap();
        let s = CoordinateSubset::new(vec![0, 1], 4).unwrap();
        let x = [0.0; 4];
        let r = finite_diff_check(&f, &x, &s, 1e-5).unwrap();
        assert!(r.hess_err <= 1e-6);
        assert!((min_eigenvalue_sym(&f.hessian_block(&x, &s)) + 2.0).abs() < 1e-14);
    }

    #[test]
    fn fd_rejects_bad_step() {
        let f = SaddleQuartic::new(2, 1.0).unwrap();
        assert!(finite_diff_check(&f, &[0.0, 0.0], &CoordinateSubset::full(2), 0.0).is_err());
        assert!(finite_diff_check(&f, &[0.0], &CoordinateSubset::full(2), 1e-3).is_err());
    }

    #[test]
    fn l2_estimate_zero_for_quadratic() {
        let q = Quadratic::new(DMatrix::identity(3, 3), vec![0.0; 3]).unwrap();
        assert_eq!(estimate_hessian_lipschitz(&q, 1.0, 10, 3, 1), 0.0);
    }

    #[test]
    fn l2_estimate_positive_for_quartic() {
        let f = SaddleQuartic::new(3, 0.25).unwrap();
        // Hessian of s‖x‖⁴ changes at rate ≈ 24·s·‖x‖ near the box; positive and finite.
        let est = estimate_hessian_lipschitz(&f, 1.0, 40, 3, 1);
        assert!(est > 0.0 && est.is_finite());
    }
}

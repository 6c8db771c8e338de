use nalgebra::DMatrix;

use super::{Lipschitz, Objective};
use crate::data_io::SparseDataset;
use crate::error::{Result, SscnError};
use crate::subset::CoordinateSubset;

/// Logistic loss with the non-convex regularizer `λ·Σ x_j²/(1 + x_j²)`.
///
/// With `normalize` the loss is averaged over samples, otherwise summed.
#[derive(Debug, Clone)]
pub struct RegularizedLogistic {
    data: SparseDataset,
    lambda: f64,
    normalize: bool,
    l1: f64,
}

/// `log(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Logistic sigmoid `1 / (1 + e^{−t})`.
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `r(t) = t²/(1+t²)`.
pub(crate) fn reg(t: f64) -> f64 {
    let t2 = t * t;
    t2 / (1.0 + t2)
}

/// `r'(t) = 2t/(1+t²)²`.
pub(crate) fn reg_d1(t: f64) -> f64 {
    let d = 1.0 + t * t;
    2.0 * t / (d * d)
}

/// `r''(t) = 2(1−3t²)/(1+t²)³`.
pub(crate) fn reg_d2(t: f64) -> f64 {
    let d = 1.0 + t * t;
    2.0 * (1.0 - 3.0 * t * t) / (d * d * d)
}

impl RegularizedLogistic {
    pub fn new(data: SparseDataset, lambda: f64, normalize: bool) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(SscnError::InvalidParameter(format!("lambda = {lambda} must be finite and nonnegative")));
        }
        let mut obj = Self { data, lambda, normalize, l1: 0.0 };
        // |r''| ≤ 2 and σ(z)σ(−z) ≤ 1/4
        obj.l1 = obj.scale() * obj.design_spectral_norm_sq() / 4.0 + 2.0 * lambda;
        Ok(obj)
    }

    pub fn data(&self) -> &SparseDataset {
        &self.data
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn normalize(&self) -> bool {
        self.normalize
    }

    fn scale(&self) -> f64 {
        if self.normalize {
            1.0 / self.data.n_samples() as f64
        } else {
            1.0
        }
    }

    /// `z_i = y_i⟨a_i, x⟩` for every sample.
    pub fn margins(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .rows()
            .iter()
            .zip(self.data.labels())
            .map(|(row, &y)| y * row.iter().map(|&(j, v)| v * x[j]).sum::<f64>())
            .collect()
    }

    /// Power-iteration estimate of `‖A‖₂²`.
    fn design_spectral_norm_sq(&self) -> f64 {
        let n = self.data.n_features();
        let mut v = vec![1.0 / (n as f64).sqrt(); n];
        let mut est = 0.0;
        for _ in 0..200 {
            let av: Vec<f64> = self.data.rows().iter().map(|row| row.iter().map(|&(j, a)| a * v[j]).sum()).collect();
            let mut w = vec![0.0; n];
            for (row, &s) in self.data.rows().iter().zip(&av) {
                for &(j, a) in row {
                    w[j] += a * s;
                }
            }
            let norm = w.iter().map(|t| t * t).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            let prev = est;
            est = norm;
            v = w.into_iter().map(|t| t / norm).collect();
            if (est - prev).abs() <= 1e-12 * est {
                break;
            }
        }
        est
    }

    fn loss_grad_entry(&self, j: usize, margin: &[f64]) -> f64 {
        let labels = self.data.labels();
        self.data.column(j).iter().map(|&(i, a)| -labels[i] * a * sigmoid(-margin[i])).sum::<f64>() * self.scale()
    }
}

impl Objective for RegularizedLogistic {
    fn dim(&self) -> usize {
        self.data.n_features()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let loss: f64 = self.margins(x).into_iter().map(|z| softplus(-z)).sum();
        let reg_term: f64 = x.iter().map(|&t| reg(t)).sum();
        self.scale() * loss + self.lambda * reg_term
    }

    fn grad_full(&self, x: &[f64]) -> Vec<f64> {
        let margin = self.margins(x);
        // Column-wise accumulation, so entries match `grad_subset` bit for bit.
        (0..x.len()).map(|j| self.loss_grad_entry(j, &margin) + self.lambda * reg_d1(x[j])).collect()
    }

    fn grad_subset(&self, x: &[f64], s: &CoordinateSubset) -> Vec<f64> {
        let margin = self.margins(x);
        s.indices().iter().map(|&j| self.loss_grad_entry(j, &margin) + self.lambda * reg_d1(x[j])).collect()
    }

    fn hessian_block(&self, x: &[f64], s: &CoordinateSubset) -> DMatrix<f64> {
        let tau = s.tau();
        let margin = self.margins(x);
        let scale = self.scale();
        // Gather each sample's nonzeros restricted to S from the sampled columns.
        let mut per_sample: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.data.n_samples()];
        let mut touched = Vec::new();
        for (local, &j) in s.indices().iter().enumerate() {
            for &(i, a) in self.data.column(j) {
                if per_sample[i].is_empty() {
                    touched.push(i);
                }
                per_sample[i].push((local, a));
            }
        }
        let mut h = DMatrix::<f64>::zeros(tau, tau);
        for &i in &touched {
            let z = margin[i];
            let w = sigmoid(z) * sigmoid(-z) * scale;
            let entries = &per_sample[i];
            for &(p, ap) in entries {
                for &(q, aq) in entries {
                    if q >= p {
                        h[(p, q)] += w * ap * aq;
                    }
                }
            }
        }
        for p in 0..tau {
            for q in 0..p {
                h[(p, q)] = h[(q, p)];
            }
            h[(p, p)] += self.lambda * reg_d2(x[s.indices()[p]]);
        }
        h
    }

    fn lipschitz(&self) -> Lipschitz {
        Lipschitz { l1: Some(self.l1), l2: None }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::parse_libsvm_str;

    fn no_features(n: usize, lambda: f64) -> RegularizedLogistic {
        let d = SparseDataset::new(n, vec![vec![]], vec![1.0]).unwrap();
        RegularizedLogistic::new(d, lambda, true).unwrap()
    }

    #[test]
    fn value_at_origin_is_log2() {
        let d = SparseDataset::synthetic(30, 5, 0.5, 1).unwrap();
        let obj = RegularizedLogistic::new(d, 0.1, true).unwrap();
        assert!((obj.value(&[0.0; 5]) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn large_margin_asymptote() {
        let d = parse_libsvm_str("+1 1:1\n", None).unwrap();
        let obj = RegularizedLogistic::new(d, 0.0, true).unwrap();
        let v = obj.value(&[50.0]);
        assert!((v - (-50f64).exp()).abs() < 1e-20);
        assert!(obj.value(&[-800.0]).is_finite());
        assert!((obj.value(&[-800.0]) - 800.0).abs() < 1e-9);
    }

    #[test]
    fn regularizer_alone() {
        let obj = no_features(4, 0.1);
        // loss term on the single empty row is log 2
        let v = obj.value(&[1.0; 4]) - std::f64::consts::LN_2;
        assert!((v - 0.1 * 4.0 * 0.5).abs() < 1e-15);
    }

    #[test]
    fn regularizer_gradient_entries() {
        let obj = no_features(3, 1.0);
        let s = CoordinateSubset::full(3);
        assert_eq!(obj.grad_subset(&[0.0; 3], &s), vec![0.0; 3]);
        let g = obj.grad_subset(&[1.0, 0.0, 0.0], &s);
        assert_eq!(g[0], 0.5);
        // central differences of r at t = 1
        let h = 1e-5;
        let fd = (reg(1.0 + h) - reg(1.0 - h)) / (2.0 * h);
        assert!((fd - 0.5).abs() < 1e-8);
    }

    #[test]
    fn regularizer_curvature_entries() {
        let obj = no_features(2, 1.0);
        let s = CoordinateSubset::full(2);
        let h0 = obj.hessian_block(&[0.0, 0.0], &s);
        assert_eq!(h0, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]));
        let h1 = obj.hessian_block(&[1.0, 0.0], &s);
        assert_eq!(h1[(0, 0)], -0.5);
        let d = 1e-5;
        let fd = (reg_d1(1.0 + d) - reg_d1(1.0 - d)) / (2.0 * d);
        assert!((fd + 0.5).abs() < 1e-8);
    }

    #[test]
    fn single_sample_block() {
        let d = parse_libsvm_str("+1 1:1\n", Some(2)).unwrap();
        let obj = RegularizedLogistic::new(d, 0.0, true).unwrap();
        let h = obj.hessian_block(&[0.0, 0.0], &CoordinateSubset::full(2));
        assert_eq!(h, DMatrix::from_row_slice(2, 2, &[0.25, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn subset_oracles_match_full() {
        let d = SparseDataset::synthetic(25, 7, 0.6, 4).unwrap();
        let obj = RegularizedLogistic::new(d, 0.1, false).unwrap();
        let x: Vec<f64> = (0..7).map(|i| (i as f64 - 3.0) * 0.3).collect();
        let full_g = obj.grad_full(&x);
        let full_h = obj.hessian_full(&x);
        let s = CoordinateSubset::new(vec![1, 4, 6], 7).unwrap();
        let gs = obj.grad_subset(&x, &s);
        let hs = obj.hessian_block(&x, &s);
        for (a, &i) in s.indices().iter().enumerate() {
            assert_eq!(gs[a], full_g[i]);
            for (b, &j) in s.indices().iter().enumerate() {
                assert!((hs[(a, b)] - full_h[(i, j)]).abs() <= 1e-15 * (1.0 + full_h[(i, j)].abs()));
            }
        }
        assert_eq!(obj.grad_subset(&x, &CoordinateSubset::full(7)), full_g);
        assert_eq!(hs, hs.transpose());
    }

    #[test]
    fn l1_bounds_observed_curvature() {
        let d = SparseDataset::synthetic(50, 6, 1.0, 2).unwrap();
        let obj = RegularizedLogistic::new(d, 0.1, true).unwrap();
        let l1 = obj.lipschitz().l1.unwrap();
        for k in 0..5 {
            let x: Vec<f64> = (0..6).map(|i| ((i + k) as f64 * 0.7).sin()).collect();
            assert!(super::super::spectral_norm_sym(&obj.hessian_full(&x)) <= l1 * (1.0 + 1e-9));
        }
    }

    #[test]
    fn rejects_negative_lambda() {
        let d = SparseDataset::synthetic(5, 2, 1.0, 1).unwrap();
        assert!(RegularizedLogistic::new(d, -1.0, true).is_err());
    }

    #[test]
    fn value_nonnegative_normalized() {
        let d = SparseDataset::synthetic(20, 4, 1.0, 8).unwrap();
        let obj = RegularizedLogistic::new(d, 0.1, true).unwrap();
        for k in 0..20 {
            let x: Vec<f64> = (0..4).map(|i| ((i * 7 + k) as f64).cos() * 20.0).collect();
            let v = obj.value(&x);
            assert!(v.is_finite() && v >= 0.0);
        }
    }
}

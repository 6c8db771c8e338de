//! Global minimization of the cubic model
//! `m(h) = f + ⟨g, h⟩ + ½⟨Qh, h⟩ + (M/6)‖h‖³`.
//!
//! Any global minimizer satisfies `(Q + αI)h = −g` with `α = M‖h‖/2` and
//! `Q + αI ⪰ 0`. [`solve_global`] works in the eigenbasis of `Q` and solves the
//! one-dimensional secular equation for the shift, handling the hard case
//! (gradient orthogonal to the bottom eigenspace) explicitly. The dual
//! maximization over `α` in [`solve_alpha_dual`] and the grid search in
//! [`brute_force_oracle`] exist to cross-check it.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Result, SscnError};
use crate::model::CubicModel;

/// Default relative stationarity tolerance.
pub const DEFAULT_TOL: f64 = 1e-5;

/// Relative size below which a gradient component on the bottom eigenspace
/// is treated as zero.
const HARD_CASE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    pub h_star: Vec<f64>,
    /// `‖h_star‖`.
    pub r: f64,
    /// Multiplier `M·r/2`.
    pub alpha: f64,
    /// `‖g + Q h + α h‖`.
    pub stationarity_residual: f64,
    /// `λ_min(Q + αI)`.
    pub min_shifted_eig: f64,
    pub hard_case: bool,
    /// Model value at `h_star`.
    pub model_value: f64,
    /// `λ_min(Q)`.
    pub min_eig: f64,
    /// `‖Q‖₂`.
    pub q_norm: f64,
}

impl SubproblemSolution {
    /// True when the stationarity residual is within `tol·max(1, ‖g‖)`.
    pub fn is_stationary(&self, g_norm: f64, tol: f64) -> bool {
        self.stationarity_residual <= tol * g_norm.max(1.0)
    }
}

fn check_inputs(m: &CubicModel, tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(SscnError::InvalidParameter(format!("tolerance {tol} must be positive")));
    }
    if m.q.iter().chain(m.g.iter()).any(|v| !v.is_finite()) {
        return Err(SscnError::NonFiniteCurvature);
    }
    Ok(())
}

/// Eigenpairs of `Q` sorted by ascending eigenvalue.
fn sorted_eigen(q: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(q.clone());
    let mut order: Vec<usize> = (0..q.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(q.nrows(), q.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

fn finish(m: &CubicModel, h: DVector<f64>, hard_case: bool, min_eig: f64, q_norm: f64) -> SubproblemSolution {
    let r = h.norm();
    let alpha = 0.5 * m.m * r;
    let residual = (&m.g + &m.q * &h + &h * alpha).norm();
    let h_star: Vec<f64> = h.as_slice().to_vec();
    let model_value = crate::model::model_value(m, &h_star).expect("dimension fixed by construction");
    SubproblemSolution {
        h_star,
        r,
        alpha,
        stationarity_residual: residual,
        min_shifted_eig: min_eig + alpha,
        hard_case,
        model_value,
        min_eig,
        q_norm,
    }
}

/// Exact global minimizer of the cubic model, O(τ³).
///
/// In the eigenbasis `Q = VΛVᵀ`, `g̃ = Vᵀg`, the minimizer is
/// `h̃_i = −g̃_i/(λ_i + α)` where the shift `α = M r/2` solves
/// `‖h̃(α)‖ = r` with `λ_1 + α ≥ 0`. The root is bracketed and found by
/// safeguarded Newton iteration on `s = λ_1 + α`, which keeps the small
/// denominators `(λ_i − λ_1) + s` free of cancellation. When `g̃` vanishes
/// on the bottom eigenspace and no root exists above `s = 0`, the bottom
/// eigenvector (sign fixed so its first nonzero entry is positive) is added
/// to reach `r = −2λ_1/M`.
pub fn solve_global(m: &CubicModel, tol: f64) -> Result<SubproblemSolution> {
    check_inputs(m, tol)?;
    let (lambda, v) = sorted_eigen(&m.q);
    let lam1 = lambda[0];
    let q_norm = lambda.iter().fold(0.0f64, |acc, l| acc.max(l.abs()));
    let gt = v.transpose() * &m.g;
    let g_norm = gt.norm();
    let tau = m.tau();

    if g_norm == 0.0 && lam1 >= 0.0 {
        return Ok(finish(m, DVector::zeros(tau), false, lam1, q_norm));
    }

    let eig_tol = 1e-12 * q_norm.max(1.0);
    let bottom: Vec<usize> = (0..tau).filter(|&i| lambda[i] - lam1 <= eig_tol).collect();
    let bottom_vanishes = bottom.iter().all(|&i| gt[i].abs() < HARD_CASE_THRESHOLD * g_norm) || g_norm == 0.0;
    let hard_candidate = lam1 <= 0.0 && bottom_vanishes;

    // Components entering the secular equation.
    let active: Vec<usize> = if hard_candidate {
        (0..tau).filter(|i| !bottom.contains(i)).collect()
    } else {
        (0..tau).collect()
    };
    let gap: Vec<f64> = lambda.iter().map(|l| l - lam1).collect();
    let h_norm_at = |s: f64| -> f64 {
        active.iter().map(|&i| (gt[i] / (gap[i] + s)).powi(2)).sum::<f64>().sqrt()
    };
    let r_of = |s: f64| 2.0 * (s - lam1) / m.m;

    let s_lo = lam1.max(0.0);
    if hard_candidate {
        let hp_norm = h_norm_at(0.0);
        let r_lo = r_of(0.0);
        if hp_norm <= r_lo {
            let mut ht = DVector::zeros(tau);
            for &i in &active {
                ht[i] = -gt[i] / gap[i];
            }
            let mut h = &v * ht;
            let t = (r_lo * r_lo - hp_norm * hp_norm).max(0.0).sqrt();
            let mut dir = v.column(bottom[0]).clone_owned();
            if let Some(first) = dir.iter().copied().find(|c| c.abs() > 1e-14) {
                if first < 0.0 {
                    dir = -dir;
                }
            }
            h += dir * t;
            return Ok(finish(m, h, true, lam1, q_norm));
        }
    }

    // Bracket: φ(s) = ‖h(s)‖ − r(s) is decreasing; φ(s_hi) ≤ 0 since ‖h(s)‖ ≤ ‖g‖/s.
    let phi = |s: f64| h_norm_at(s) - r_of(s);
    let mut hi = 0.5 * (lam1 + (lam1 * lam1 + 2.0 * m.m * g_norm).sqrt());
    hi = hi.max(s_lo);
    while phi(hi) > 0.0 {
        hi = 2.0 * hi.max(f64::MIN_POSITIVE);
    }
    let mut lo = s_lo;
    let mut s = hi;
    for _ in 0..500 {
        let hn = h_norm_at(s);
        let f = hn - r_of(s);
        if f == 0.0 {
            break;
        }
        if f > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let d3: f64 = active.iter().map(|&i| gt[i] * gt[i] / (gap[i] + s).powi(3)).sum();
        let dphi = -d3 / hn.max(f64::MIN_POSITIVE) - 2.0 / m.m;
        let newton = s - f / dphi;
        s = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else if lo > 0.0 && hi / lo > 1e3 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if s <= lo || s >= hi {
            s = 0.5 * (lo + hi);
        }
    }
    let mut ht = DVector::zeros(tau);
    for &i in &active {
        ht[i] = -gt[i] / (gap[i] + s);
    }
    Ok(finish(m, &v * ht, false, lam1, q_norm))
}

/// Dual objective `−½⟨(Q + αI)⁻¹g, g⟩ − (2/3)·α³/M²`, concave on `Q + αI ≻ 0`.
///
/// Returns `None` where `Q + αI` is not positive definite.
pub fn dual_objective(m: &CubicModel, alpha: f64) -> Option<f64> {
    let shifted = &m.q + DMatrix::identity(m.tau(), m.tau()) * alpha;
    let chol = shifted.cholesky()?;
    let x = chol.solve(&m.g);
    Some(-0.5 * x.dot(&m.g) - 2.0 / 3.0 * alpha.powi(3) / (m.m * m.m))
}

/// Derivative of [`dual_objective`]: `½‖(Q + αI)⁻¹g‖² − 2α²/M²`.
fn dual_slope(m: &CubicModel, alpha: f64) -> Option<(f64, DVector<f64>)> {
    let shifted = &m.q + DMatrix::identity(m.tau(), m.tau()) * alpha;
    let chol = shifted.cholesky()?;
    let x = chol.solve(&m.g);
    Some((0.5 * x.norm_squared() - 2.0 * alpha * alpha / (m.m * m.m), x))
}

/// Solves the cubic model through the univariate concave dual in `α`, using
/// Cholesky solves of `Q + αI` and bisection on the dual slope.
///
/// Returns [`SscnError::HardCase`] when the maximizer sits on the boundary
/// `α = −λ_min(Q)`; [`solve_global`] handles that case.
pub fn solve_alpha_dual(m: &CubicModel, tol: f64) -> Result<SubproblemSolution> {
    check_inputs(m, tol)?;
    let tau = m.tau();
    let eigs = m.q.clone().symmetric_eigenvalues();
    let lam1 = eigs.iter().copied().fold(f64::INFINITY, f64::min);
    let q_norm = eigs.iter().fold(0.0f64, |acc, l| acc.max(l.abs()));
    if m.g.norm() == 0.0 {
        if lam1 >= 0.0 {
            return Ok(finish(m, DVector::zeros(tau), false, lam1, q_norm));
        }
        return Err(SscnError::HardCase);
    }
    let floor = (-lam1).max(0.0);
    let eta = 1e-9 * q_norm.max(1.0);
    let mut lo = if lam1 > 0.0 { 0.0 } else { floor + eta };
    match dual_slope(m, lo) {
        Some((slope, _)) if slope > 0.0 => {}
        _ => return Err(SscnError::HardCase),
    }
    let mut hi = lo.max(1.0);
    loop {
        match dual_slope(m, hi) {
            Some((slope, _)) if slope < 0.0 => break,
            Some(_) => {
                lo = hi;
                hi *= 2.0;
            }
            None => return Err(SscnError::NonFiniteCurvature),
        }
        if !hi.is_finite() {
            return Err(SscnError::NonFiniteCurvature);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match dual_slope(m, mid) {
            Some((slope, _)) if slope > 0.0 => lo = mid,
            Some(_) => hi = mid,
            None => lo = mid,
        }
    }
    let alpha = 0.5 * (lo + hi);
    let (_, x) = dual_slope(m, alpha).ok_or(SscnError::NonFiniteCurvature)?;
    let h = -x;
    let mut sol = finish(m, h, false, lam1, q_norm);
    sol.alpha = alpha;
    sol.min_shifted_eig = lam1 + alpha;
    sol.stationarity_residual = (&m.g + &m.q * DVector::from_column_slice(&sol.h_star) + DVector::from_column_slice(&sol.h_star) * alpha).norm();
    Ok(sol)
}

/// Step for `Q = 0`: `h = −η g` with `η = sqrt(2/(M‖g‖))`; zero when `g = 0`.
pub fn closed_form_zero_curvature(g: &[f64], m: f64) -> Vec<f64> {
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return vec![0.0; g.len()];
    }
    let eta = (2.0 / (m * norm)).sqrt();
    g.iter().map(|v| -eta * v).collect()
}

/// A priori bound on the norm of any global minimizer: stationarity gives
/// `(M/2)r² ≤ ‖g‖ + ‖Q‖r`.
pub fn minimizer_norm_bound(m: &CubicModel) -> f64 {
    let qn = crate::objectives::spectral_norm_sym(&m.q);
    let gn = m.g.norm();
    (qn + (qn * qn + 2.0 * m.m * gn).sqrt()) / m.m
}

/// Grid search over `[−radius, radius]^τ` followed by pattern-search polishing
/// from the best grid points. Only for `τ ≤ 3`.
pub fn brute_force_oracle(m: &CubicModel, grid_radius: f64, grid_points: usize) -> Result<(Vec<f64>, f64)> {
    let tau = m.tau();
    if tau > 3 {
        return Err(SscnError::OracleDimension(tau));
    }
    if grid_points < 100 {
        return Err(SscnError::InvalidParameter(format!("grid_points = {grid_points} below 100")));
    }
    if !(grid_radius > 0.0) {
        return Err(SscnError::InvalidParameter(format!("grid radius {grid_radius} must be positive")));
    }
    let g: Vec<f64> = m.g.iter().copied().collect();
    let q: Vec<f64> = (0..tau * tau).map(|k| m.q[(k / tau, k % tau)]).collect();
    let eval = |h: &[f64]| -> f64 {
        let mut lin = 0.0;
        let mut quad = 0.0;
        let mut nsq = 0.0;
        for i in 0..tau {
            lin += g[i] * h[i];
            nsq += h[i] * h[i];
            let mut row = 0.0;
            for j in 0..tau {
                row += q[i * tau + j] * h[j];
            }
            quad += row * h[i];
        }
        m.f_at_x + lin + 0.5 * quad + m.m / 6.0 * nsq * nsq.sqrt()
    };

    let spacing = 2.0 * grid_radius / (grid_points - 1) as f64;
    let coord = |k: usize| -grid_radius + spacing * k as f64;
    const KEEP: usize = 8;
    let mut best: Vec<(f64, Vec<f64>)> = Vec::with_capacity(KEEP + 1);
    let total = grid_points.pow(tau as u32);
    let mut h = vec![0.0; tau];
    for flat in 0..total {
        let mut rest = flat;
        for slot in h.iter_mut() {
            *slot = coord(rest % grid_points);
            rest /= grid_points;
        }
        let val = eval(&h);
        if best.len() < KEEP || val < best[best.len() - 1].0 {
            let pos = best.partition_point(|(b, _)| *b <= val);
            best.insert(pos, (val, h.clone()));
            best.truncate(KEEP);
        }
    }
    // the origin is always a candidate
    best.push((eval(&vec![0.0; tau]), vec![0.0; tau]));

    let mut winner = (f64::INFINITY, vec![0.0; tau]);
    for (mut val, mut point) in best {
        let mut step = spacing;
        while step > 1e-13 * (1.0 + grid_radius) {
            let mut improved = false;
            for i in 0..tau {
                for dir in [1.0, -1.0] {
                    let old = point[i];
                    point[i] = old + dir * step;
                    let trial = eval(&point);
                    if trial < val {
                        val = trial;
                        improved = true;
                    } else {
                        point[i] = old;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if val < winner.0 {
            winner = (val, point);
        }
    }
    Ok((winner.1, winner.0))
}

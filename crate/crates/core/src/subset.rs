//! Coordinate subsets, their sampling, and subset-size schedules.
//!
//! Sampling is uniform over all `tau`-subsets of `[n]`. Runs draw from a
//! [`ChaCha8Rng`](rand_chacha::ChaCha8Rng) seeded with the run's `u64` seed,
//! so a fixed seed reproduces the same subset sequence.

use std::collections::HashSet;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SscnError};

/// Sorted set of sampled coordinates inside an ambient dimension `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoordinateSubset {
    indices: Vec<usize>,
    n: usize,
}

impl CoordinateSubset {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(SscnError::InvalidSubset("subset must contain at least one index".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SscnError::InvalidSubset("indices must be strictly increasing".into()));
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(SscnError::InvalidSubset(format!("index {last} out of range for n = {n}")));
            }
        }
        Ok(Self { indices, n })
    }

    /// All of `[n]`.
    pub fn full(n: usize) -> Self {
        Self { indices: (0..n).collect(), n }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Subset size τ(S).
    pub fn tau(&self) -> usize {
        self.indices.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn is_full(&self) -> bool {
        self.indices.len() == self.n
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn restrict(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(SscnError::DimensionMismatch { expected: self.n, got: x.len() });
        }
        Ok(self.indices.iter().map(|&i| x[i]).collect())
    }

    /// Zero-filled embedding of a τ-vector into ℝⁿ.
    pub fn embed(&self, h: &[f64]) -> Result<Vec<f64>> {
        if h.len() != self.tau() {
            return Err(SscnError::DimensionMismatch { expected: self.tau(), got: h.len() });
        }
        let mut out = vec![0.0; self.n];
        for (&i, &v) in self.indices.iter().zip(h) {
            out[i] = v;
        }
        Ok(out)
    }

    /// `x + embed(h)`, touching only the sampled coordinates.
    pub fn apply_step(&self, x: &[f64], h: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(SscnError::DimensionMismatch { expected: self.n, got: x.len() });
        }
        if h.len() != self.tau() {
            return Err(SscnError::DimensionMismatch { expected: self.tau(), got: h.len() });
        }
        let mut out = x.to_vec();
        for (&i, &v) in self.indices.iter().zip(h) {
            out[i] += v;
        }
        Ok(out)
    }
}

/// Restriction `x|_S`.
pub fn restrict_vector(x: &[f64], s: &CoordinateSubset) -> Result<Vec<f64>> {
    s.restrict(x)
}

/// Embedding of a τ-vector into ℝⁿ, zero off `S`.
pub fn embed_vector(h: &[f64], s: &CoordinateSubset, n: usize) -> Result<Vec<f64>> {
    if n != s.ambient_dim() {
        return Err(SscnError::DimensionMismatch { expected: s.ambient_dim(), got: n });
    }
    s.embed(h)
}

/// Draws a uniformly random `tau`-subset of `[n]`.
///
/// Small subsets (`4·tau ≤ n`) use Floyd's algorithm, O(τ) expected; larger
/// ones a partial Fisher–Yates shuffle. `tau == n` consumes no randomness.
pub fn sample_uniform<R: Rng + ?Sized>(n: usize, tau: usize, rng: &mut R) -> Result<CoordinateSubset> {
    if tau == 0 || tau > n {
        return Err(SscnError::InvalidParameter(format!("tau = {tau} outside [1, {n}]")));
    }
    if tau == n {
        return Ok(CoordinateSubset::full(n));
    }
    let mut indices = if 4 * tau <= n {
        let mut chosen = HashSet::with_capacity(tau);
        let mut picked = Vec::with_capacity(tau);
        for j in (n - tau)..n {
            let t = rng.random_range(0..=j);
            let pick = if chosen.contains(&t) { j } else { t };
            chosen.insert(pick);
            picked.push(pick);
        }
        picked
    } else {
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..tau {
            let j = rng.random_range(i..n);
            pool.swap(i, j);
        }
        pool.truncate(tau);
        pool
    };
    indices.sort_unstable();
    Ok(CoordinateSubset { indices, n })
}

/// Parameters of the adaptive subset-size rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveParams {
    /// Constant `c` in ε₁ = ε₂ = c·‖h*_{k−1}‖².
    pub c: f64,
    /// EMA weight for the gradient/Hessian norm trackers.
    pub ema_alpha: f64,
    /// EMA weight smoothing successive subset sizes.
    pub smooth_beta: f64,
    pub tau_min: usize,
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        Self { c: 1.0, ema_alpha: 0.2, smooth_beta: 0.5, tau_min: 1 }
    }
}

/// How many coordinates to sample at each iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingSchedule {
    Constant { tau: usize },
    /// `τ_k = τ₀ + c_e·exp(d·k)`, rounded to nearest.
    Exponential { tau0: f64, c_e: f64, d: f64 },
    Adaptive(AdaptiveParams),
}

impl SamplingSchedule {
    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            Self::Constant { tau } if tau == 0 || tau > n => {
                Err(SscnError::InvalidParameter(format!("constant tau = {tau} outside [1, {n}]")))
            }
            Self::Exponential { tau0, c_e, d } if !(tau0 >= 1.0 && c_e >= 0.0 && d >= 0.0) => Err(
                SscnError::InvalidParameter(format!("exponential schedule needs tau0 >= 1, c_e >= 0, d >= 0 (got {tau0}, {c_e}, {d})")),
            ),
            Self::Adaptive(p)
                if !(p.ema_alpha > 0.0 && p.ema_alpha <= 1.0)
                    || !(p.smooth_beta > 0.0 && p.smooth_beta <= 1.0)
                    || !(p.c > 0.0)
                    || p.tau_min == 0
                    || p.tau_min > n =>
            {
                Err(SscnError::InvalidParameter(format!("invalid adaptive schedule {p:?} for n = {n}")))
            }
            _ => Ok(()),
        }
    }

    /// Subset size for iteration `state.k`. The adaptive variant also records
    /// its smoothed size in `state`.
    pub fn next_tau(&self, state: &mut ScheduleState, n: usize) -> usize {
        match *self {
            Self::Constant { tau } => tau.clamp(1, n),
            Self::Exponential { tau0, c_e, d } => {
                let raw = (tau0 + c_e * (d * state.k as f64).exp()).round();
                if raw >= n as f64 {
                    n
                } else {
                    (raw as usize).clamp(1, n)
                }
            }
            Self::Adaptive(p) => {
                let tau_min = p.tau_min.clamp(1, n);
                let (Some(step), Some(prev)) = (state.prev_step_norm, state.prev_tau_smoothed) else {
                    let boot = ((0.05 * n as f64).ceil() as usize).max(tau_min).min(n);
                    state.prev_tau_smoothed = Some(boot as f64);
                    return boot;
                };
                let eps = p.c * step * step;
                let proposed = adaptive_tau(
                    state.grad_norm_est.unwrap_or(0.0),
                    state.hess_norm_est.unwrap_or(0.0),
                    eps,
                    eps,
                    n,
                );
                let smoothed = p.smooth_beta * proposed as f64 + (1.0 - p.smooth_beta) * prev;
                state.prev_tau_smoothed = Some(smoothed);
                (smoothed.round() as usize).clamp(tau_min, n)
            }
        }
    }
}

/// Per-run mutable state of a schedule.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScheduleState {
    pub k: usize,
    pub grad_norm_est: Option<f64>,
    pub hess_norm_est: Option<f64>,
    pub prev_step_norm: Option<f64>,
    pub prev_tau_smoothed: Option<f64>,
}

impl ScheduleState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Folds the observations of one finished iteration into the trackers.
    pub fn observe(&mut self, grad_subset_norm: f64, hess_block_norm: f64, step_norm: f64, ema_alpha: f64) {
        self.grad_norm_est = Some(ema_update(self.grad_norm_est, grad_subset_norm, ema_alpha));
        self.hess_norm_est = Some(ema_update(self.hess_norm_est, hess_block_norm, ema_alpha));
        self.prev_step_norm = Some(step_norm);
        self.k += 1;
    }
}

/// `α·new + (1−α)·old`; the first observation is taken as is.
pub fn ema_update(old: Option<f64>, new: f64, alpha: f64) -> f64 {
    match old {
        Some(old) => alpha * new + (1.0 - alpha) * old,
        None => new,
    }
}

/// Returns a copy of `state` with both norm trackers updated.
pub fn update_estimates(state: &ScheduleState, grad_subset_norm: f64, hess_block_norm: f64, ema_alpha: f64) -> ScheduleState {
    let mut next = state.clone();
    next.grad_norm_est = Some(ema_update(state.grad_norm_est, grad_subset_norm, ema_alpha));
    next.hess_norm_est = Some(ema_update(state.hess_norm_est, hess_block_norm, ema_alpha));
    next
}

/// Smallest τ with `τ/n ≥ max{1 − ε₁²/‖g‖², sqrt(1 − ε₂/‖H‖²)}`, clipped to `[1, n]`.
///
/// A branch whose norm estimate is zero or whose bracket is negative
/// contributes nothing.
pub fn adaptive_tau(grad_norm_est: f64, hess_norm_est: f64, eps1: f64, eps2: f64, n: usize) -> usize {
    let grad_branch = if grad_norm_est > 0.0 { 1.0 - (eps1 * eps1) / (grad_norm_est * grad_norm_est) } else { 0.0 };
    let hess_branch = if hess_norm_est > 0.0 {
        (1.0 - eps2 / (hess_norm_est * hess_norm_est)).max(0.0).sqrt()
    } else {
        0.0
    };
    let frac = grad_branch.max(hess_branch).max(0.0);
    // 1e-9 absorbs representation error such as 100·0.99 = 99.000…01
    let tau = (n as f64 * frac - 1e-9).ceil();
    if tau <= 1.0 {
        1
    } else {
        (tau as usize).min(n)
    }
}

/// Probability that two fixed distinct coordinates are both sampled.
pub fn pair_inclusion_probability(n: usize, tau: usize) -> f64 {
    if n < 2 {
        return 1.0;
    }
    (tau as f64 * (tau as f64 - 1.0)) / (n as f64 * (n as f64 - 1.0))
}

/// `E‖g − g_[S]‖² = (1 − τ/n)‖g‖²`.
pub fn expected_grad_gap(g: &[f64], tau: usize) -> f64 {
    let n = g.len() as f64;
    (1.0 - tau as f64 / n) * g.iter().map(|v| v * v).sum::<f64>()
}

/// Exact `E‖H_[S] − H‖_F²`: diagonal entries survive with probability τ/n,
/// off-diagonal ones with probability p₂.
pub fn expected_hess_gap(h: &DMatrix<f64>, tau: usize) -> f64 {
    let n = h.nrows();
    let p1 = tau as f64 / n as f64;
    let p2 = pair_inclusion_probability(n, tau);
    let mut diag = 0.0;
    let mut off = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v = h[(i, j)] * h[(i, j)];
            if i == j {
                diag += v;
            } else {
                off += v;
            }
        }
    }
    (1.0 - p1) * diag + (1.0 - p2) * off
}

/// `(1 − p₂)‖H‖_F²`, which upper-bounds [`expected_hess_gap`] and equals it
/// when `H` has a zero diagonal.
pub fn hess_gap_bound(h: &DMatrix<f64>, tau: usize) -> f64 {
    (1.0 - pair_inclusion_probability(h.nrows(), tau)) * h.norm_squared()
}

/// Monte-Carlo means of `‖g − g_[S]‖²` and `‖H_[S] − H‖_F²` over `trials` draws.
pub fn concentration_probe<R: Rng + ?Sized>(
    g: &[f64],
    h: &DMatrix<f64>,
    tau: usize,
    trials: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let n = g.len();
    if h.nrows() != n || h.ncols() != n {
        return Err(SscnError::DimensionMismatch { expected: n, got: h.nrows() });
    }
    if trials == 0 {
        return Err(SscnError::InvalidParameter("trials must be at least 1".into()));
    }
    let g_sq: f64 = g.iter().map(|v| v * v).sum();
    let h_sq = h.norm_squared();
    let mut grad_acc = 0.0;
    let mut hess_acc = 0.0;
    for _ in 0..trials {
        let s = sample_uniform(n, tau, rng)?;
        let kept_g: f64 = s.indices().iter().map(|&i| g[i] * g[i]).sum();
        let mut kept_h = 0.0;
        for &i in s.indices() {
            for &j in s.indices() {
                kept_h += h[(i, j)] * h[(i, j)];
            }
        }
        grad_acc += (g_sq - kept_g).max(0.0);
        hess_acc += (h_sq - kept_h).max(0.0);
    }
    Ok((grad_acc / trials as f64, hess_acc / trials as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use proptest::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn all_subsets(n: usize, tau: usize) -> Vec<Vec<usize>> {
        fn rec(start: usize, n: usize, tau: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == tau {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                rec(i + 1, n, tau, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(0, n, tau, &mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn full_sampling_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            assert_eq!(sample_uniform(3, 3, &mut rng).unwrap().indices(), &[0, 1, 2]);
        }
    }

    #[test]
    fn pairs_of_three_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = std::collections::HashMap::new();
        let draws = 100_000;
        for _ in 0..draws {
            *counts.entry(sample_uniform(3, 2, &mut rng).unwrap().indices().to_vec()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 3);
        for (_, c) in counts {
            assert!((c as f64 / draws as f64 - 1.0 / 3.0).abs() < 0.01);
        }
    }

    #[test]
    fn membership_probability_is_tau_over_n() {
        // Floyd path (4·2 ≤ 8) and Fisher–Yates path (4·2 > 4).
        for &(n, tau) in &[(4usize, 2usize), (8, 2)] {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let draws = 100_000;
            let mut hits = vec![0usize; n];
            for _ in 0..draws {
                for &i in sample_uniform(n, tau, &mut rng).unwrap().indices() {
                    hits[i] += 1;
                }
            }
            for h in hits {
                assert!((h as f64 / draws as f64 - tau as f64 / n as f64).abs() < 0.01, "n={n} tau={tau}");
            }
        }
    }

    #[test]
    fn floyd_path_is_uniform_over_subsets() {
        let (n, tau) = (8, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 140_000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..draws {
            *counts.entry(sample_uniform(n, tau, &mut rng).unwrap().indices().to_vec()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 28);
        for (_, c) in counts {
            assert!((c as f64 / draws as f64 - 1.0 / 28.0).abs() < 0.004);
        }
    }

    #[test]
    fn sampling_rejects_bad_tau() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_uniform(3, 0, &mut rng).is_err());
        assert!(sample_uniform(3, 4, &mut rng).is_err());
    }

    #[test]
    fn restrict_and_embed() {
        let s = CoordinateSubset::new(vec![0, 2], 3).unwrap();
        assert_eq!(restrict_vector(&[5.0, 6.0, 7.0], &s).unwrap(), vec![5.0, 7.0]);
        assert_eq!(embed_vector(&[1.0, 2.0], &s, 3).unwrap(), vec![1.0, 0.0, 2.0]);
        let x = [3.0, -1.0, 4.0];
        let back = s.embed(&s.restrict(&x).unwrap()).unwrap();
        assert_eq!(back, vec![3.0, 0.0, 4.0]);
        assert!(s.restrict(&[1.0]).is_err());
        assert!(s.embed(&[1.0]).is_err());
        assert!(CoordinateSubset::new(vec![0, 3], 3).is_err());
        assert!(CoordinateSubset::new(vec![1, 1], 3).is_err());
        assert!(CoordinateSubset::new(vec![], 3).is_err());
    }

    #[test]
    fn constant_and_exponential_schedules() {
        let mut st = ScheduleState { k: 5, ..Default::default() };
        assert_eq!(SamplingSchedule::Constant { tau: 7 }.next_tau(&mut st, 100), 7);
        assert_eq!(SamplingSchedule::Exponential { tau0: 10.0, c_e: 1.0, d: 0.0 }.next_tau(&mut st, 100), 11);
        st.k = 10;
        assert_eq!(SamplingSchedule::Exponential { tau0: 1.0, c_e: 1.0, d: 1.0 }.next_tau(&mut st, 100), 100);
        st.k = 0;
        // 1 + e^0 = 2
        assert_eq!(SamplingSchedule::Exponential { tau0: 1.0, c_e: 1.0, d: 1.0 }.next_tau(&mut st, 100), 2);
    }

    #[test]
    fn schedule_validation() {
        assert!(SamplingSchedule::Constant { tau: 0 }.validate(5).is_err());
        assert!(SamplingSchedule::Constant { tau: 6 }.validate(5).is_err());
        assert!(SamplingSchedule::Exponential { tau0: 0.5, c_e: 1.0, d: 0.1 }.validate(5).is_err());
        let bad = AdaptiveParams { ema_alpha: 0.0, ..Default::default() };
        assert!(SamplingSchedule::Adaptive(bad).validate(5).is_err());
        assert!(SamplingSchedule::Adaptive(AdaptiveParams::default()).validate(5).is_ok());
    }

    #[test]
    fn adaptive_tau_examples() {
        assert_eq!(adaptive_tau(0.5, 0.5, 1.0, 1.0, 100), 1);
        assert_eq!(adaptive_tau(2.0, 2.0, 1.0, 1.0, 100), 87);
        assert_eq!(adaptive_tau(10.0, 0.0, 1.0, 1.0, 100), 99);
        assert_eq!(adaptive_tau(0.0, 0.0, 1.0, 1.0, 100), 1);
        assert_eq!(adaptive_tau(1e6, 0.0, 1.0, 1.0, 100), 100);
    }

    #[test]
    fn ema_examples() {
        assert_eq!(ema_update(Some(1.0), 1.0, 0.2), 1.0);
        assert_eq!(ema_update(None, 5.0, 0.2), 5.0);
        assert!((ema_update(Some(1.0), 2.0, 0.2) - 1.2).abs() < 1e-15);
        let st = update_estimates(&ScheduleState::new(), 5.0, 3.0, 0.2);
        assert_eq!((st.grad_norm_est, st.hess_norm_est), (Some(5.0), Some(3.0)));
    }

    #[test]
    fn adaptive_schedule_bootstraps_then_smooths() {
        let sched = SamplingSchedule::Adaptive(AdaptiveParams { smooth_beta: 0.5, ..Default::default() });
        let mut st = ScheduleState::new();
        assert_eq!(sched.next_tau(&mut st, 100), 5);
        // huge gradient estimate relative to ε pushes the proposal to n
        st.observe(10.0, 0.0, 0.1, 0.2);
        assert_eq!(sched.next_tau(&mut st, 100), 53); // round(0.5·100 + 0.5·5) = 52.5 → 53
        st.observe(10.0, 0.0, 0.1, 0.2);
        assert_eq!(sched.next_tau(&mut st, 100), 76); // 0.5·100 + 0.5·52.5 = 76.25
    }

    #[test]
    fn all_ones_gradient_gap_is_exact() {
        let g = [1.0; 4];
        let h = DMatrix::<f64>::zeros(4, 4);
        for s in all_subsets(4, 2) {
            let kept: f64 = s.iter().map(|&i| g[i] * g[i]).sum();
            assert_eq!(4.0 - kept, 2.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (gap, _) = concentration_probe(&g, &h, 2, 1000, &mut rng).unwrap();
        assert_eq!(gap, 2.0);
        assert_eq!(expected_grad_gap(&g, 2), 2.0);
    }

    #[test]
    fn identity_hessian_gap_by_enumeration() {
        let h = DMatrix::<f64>::identity(4, 4);
        let subsets = all_subsets(4, 2);
        let exact: f64 = subsets
            .iter()
            .map(|s| {
                let kept: f64 = s.iter().flat_map(|&i| s.iter().map(move |&j| (i, j))).map(|(i, j)| h[(i, j)].powi(2)).sum();
                h.norm_squared() - kept
            })
            .sum::<f64>()
            / subsets.len() as f64;
        assert_eq!(exact, 2.0);
        assert_eq!(expected_hess_gap(&h, 2), 2.0);
        assert!((hess_gap_bound(&h, 2) - 10.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn exact_gaps_match_enumeration_for_random_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 6;
        let g: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut h = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = rng.random_range(-1.0..1.0);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        for tau in 1..=n {
            let subsets = all_subsets(n, tau);
            let (mut eg, mut eh) = (0.0, 0.0);
            for s in &subsets {
                let sub = CoordinateSubset::new(s.clone(), n).unwrap();
                let gs = sub.embed(&sub.restrict(&g).unwrap()).unwrap();
                eg += g.iter().zip(&gs).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
                let mut hs = DMatrix::<f64>::zeros(n, n);
                for &i in s {
                    for &j in s {
                        hs[(i, j)] = h[(i, j)];
                    }
                }
                eh += (&hs - &h).norm_squared();
            }
            eg /= subsets.len() as f64;
            eh /= subsets.len() as f64;
            assert!((eg - expected_grad_gap(&g, tau)).abs() < 1e-12);
            assert!((eh - expected_hess_gap(&h, tau)).abs() < 1e-12);
            assert!(eh <= hess_gap_bound(&h, tau) + 1e-12);
        }
    }

    #[test]
    fn full_sampling_gaps_vanish() {
        let g = [1.0, -2.0, 3.0];
        let h = DMatrix::<f64>::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 2.0, 1.0, 3.0, 0.0, 3.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(concentration_probe(&g, &h, 3, 10, &mut rng).unwrap(), (0.0, 0.0));
    }

    proptest! {
        #[test]
        fn embed_then_restrict_is_identity(n in 1usize..30, seed: u64, frac in 0.0f64..1.0) {
            let tau = ((n as f64 * frac).ceil() as usize).clamp(1, n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = sample_uniform(n, tau, &mut rng).unwrap();
            prop_assert_eq!(s.tau(), tau);
            let h: Vec<f64> = (0..tau).map(|i| i as f64 + 0.5).collect();
            let e = s.embed(&h).unwrap();
            prop_assert_eq!(s.restrict(&e).unwrap(), h);
            for (i, v) in e.iter().enumerate() {
                if !s.contains(i) {
                    prop_assert_eq!(*v, 0.0);
                }
            }
        }

        #[test]
        fn adaptive_tau_monotone(
            g in 0.0f64..10.0, h in 0.0f64..10.0, e1 in 0.01f64..5.0, e2 in 0.01f64..5.0,
            dg in 0.0f64..5.0, dh in 0.0f64..5.0, de in 0.0f64..5.0, n in 1usize..500,
        ) {
            let base = adaptive_tau(g, h, e1, e2, n);
            prop_assert!(adaptive_tau(g + dg, h, e1, e2, n) >= base);
            prop_assert!(adaptive_tau(g, h + dh, e1, e2, n) >= base);
            prop_assert!(adaptive_tau(g, h, e1 + de, e2, n) <= base);
            prop_assert!(adaptive_tau(g, h, e1, e2 + de, n) <= base);
            prop_assert!((1..=n).contains(&base));
        }
    }
}

//! Validation suites run by `sscn validate <suite>`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::BenchError;
use crate::data_io::SparseDataset;
use crate::model::{symmetrize, CubicModel, CurvatureSource};
use crate::objectives::{
    estimate_hessian_lipschitz, finite_diff_check, min_eigenvalue_sym, Objective, RegularizedLogistic, SaddleQuartic,
};
use crate::optimizer::{sscn_step, MPolicy, OptimizerConfig, StepState};
use crate::subproblem::{
    brute_force_oracle, closed_form_zero_curvature, minimizer_norm_bound, solve_alpha_dual, solve_global, DEFAULT_TOL,
};
use crate::subset::{concentration_probe, expected_grad_gap, hess_gap_bound, sample_uniform, CoordinateSubset, SamplingSchedule};
use crate::SscnError;

pub const SUITES: [&str; 4] = ["subproblem", "concentration", "gradcheck", "lemma1"];

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn new(suite: &str) -> Self {
        Self { suite: suite.to_string(), checks: Vec::new() }
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn render(&self) -> String {
        let mut s = format!("suite {}\n", self.suite);
        for c in &self.checks {
            let _ = writeln!(s, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        let _ = writeln!(s, "{} checks, {failed} failed", self.checks.len());
        s
    }
}

/// Regularized logistic regression on a synthetic dataset: 200 samples,
/// 50 features, λ = 0.1, averaged loss.
pub fn synthetic_logistic_fixture() -> RegularizedLogistic {
    let data = SparseDataset::synthetic(200, 50, 0.5, 1).expect("valid synthetic parameters");
    RegularizedLogistic::new(data, 0.1, true).expect("valid lambda")
}

/// Runs one suite and writes `validate-<suite>.txt` into `out`.
pub fn cmd_validate(suite: &str, out: &Path) -> Result<(SuiteReport, PathBuf), BenchError> {
    let report = run_suite(suite)?;
    std::fs::create_dir_all(out)?;
    let path = out.join(format!("validate-{suite}.txt"));
    std::fs::write(&path, report.render())?;
    Ok((report, path))
}

pub fn run_suite(suite: &str) -> Result<SuiteReport, BenchError> {
    match suite {
        "subproblem" => Ok(subproblem_suite()),
        "concentration" => Ok(concentration_suite()),
        "gradcheck" => Ok(gradcheck_suite()),
        "lemma1" => Ok(decrease_suite()),
        other => Err(BenchError::UnknownSuite(other.to_string())),
    }
}

fn random_model(rng: &mut ChaCha8Rng, tau: usize) -> CubicModel {
    let g: Vec<f64> = (0..tau).map(|_| rng.random_range(-2.0..2.0)).collect();
    let a = DMatrix::from_fn(tau, tau, |_, _| rng.random_range(-2.0..2.0));
    CubicModel::from_parts(g, symmetrize(&a), rng.random_range(0.1..10.0)).expect("finite model")
}

fn oracle_points(tau: usize) -> usize {
    match tau {
        1 => 4001,
        2 => 401,
        _ => 101,
    }
}

fn subproblem_suite() -> SuiteReport {
    let mut rep = SuiteReport::new("subproblem");
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_gap, mut worst_res, mut worst_cert) = (f64::NEG_INFINITY, 0.0f64, f64::INFINITY);
    let mut failures = 0;
    for _ in 0..200 {
        let tau = rng.random_range(1..=3);
        let m = random_model(&mut rng, tau);
        let radius = 1.05 * minimizer_norm_bound(&m) + 1e-3;
        let (sol, oracle) = match (solve_global(&m, DEFAULT_TOL), brute_force_oracle(&m, radius, oracle_points(tau))) {
            (Ok(s), Ok((_, v))) => (s, v),
            _ => {
                failures += 1;
                continue;
            }
        };
        let g_norm = m.g.norm();
        worst_gap = worst_gap.max(sol.model_value - oracle);
        worst_res = worst_res.max(sol.stationarity_residual / g_norm.max(1.0));
        worst_cert = worst_cert.min(sol.min_shifted_eig);
    }
    rep.check("solver errors", failures == 0, format!("{failures} of 200 instances failed to solve"));
    rep.check("oracle agreement", worst_gap <= 1e-6, format!("max model value minus oracle = {worst_gap:.3e}"));
    rep.check("stationarity", worst_res <= 1e-5, format!("max residual / max(1, |g|) = {worst_res:.3e}"));
    rep.check("certificate", worst_cert >= -1e-8, format!("min eigenvalue of Q + (M/2) r I = {worst_cert:.3e}"));

    let hard = CubicModel::from_parts(vec![0.0], DMatrix::from_element(1, 1, -1.0), 2.0).expect("finite");
    match solve_global(&hard, DEFAULT_TOL) {
        Ok(s) => rep.check(
            "hard case fixture",
            (s.r - 1.0).abs() <= 1e-10 && (s.model_value + 1.0 / 6.0).abs() <= 1e-10,
            format!("r = {}, model value = {}", s.r, s.model_value),
        ),
        Err(e) => rep.check("hard case fixture", false, e.to_string()),
    }

    let mut worst_cf = 0.0f64;
    for _ in 0..50 {
        let tau = rng.random_range(1..=6);
        let g: Vec<f64> = (0..tau).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mm = rng.random_range(0.1..10.0);
        let model = CubicModel::from_parts(g.clone(), DMatrix::zeros(tau, tau), mm).expect("finite");
        let h = closed_form_zero_curvature(&g, mm);
        let err = match solve_global(&model, DEFAULT_TOL) {
            Ok(s) => s.h_star.iter().zip(&h).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
            Err(_) => f64::INFINITY,
        };
        worst_cf = worst_cf.max(err);
    }
    rep.check("zero curvature closed form", worst_cf <= 1e-10, format!("max deviation = {worst_cf:.3e}"));

    let mut worst_dual = 0.0f64;
    let mut compared = 0;
    for _ in 0..100 {
        let tau = rng.random_range(1..=6);
        let m = random_model(&mut rng, tau);
        match (solve_global(&m, DEFAULT_TOL), solve_alpha_dual(&m, DEFAULT_TOL)) {
            (Ok(p), Ok(d)) => {
                worst_dual = worst_dual.max((p.model_value - d.model_value).abs() / (1.0 + p.model_value.abs()));
                compared += 1;
            }
            (Ok(_), Err(SscnError::HardCase)) => {}
            _ => worst_dual = f64::INFINITY,
        }
    }
    rep.check(
        "dual cross-check",
        worst_dual <= 1e-7 && compared > 0,
        format!("{compared} instances compared, max relative gap = {worst_dual:.3e}"),
    );
    rep
}

fn all_subsets(n: usize, tau: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|mask| mask.count_ones() as usize == tau)
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
        .collect()
}

fn concentration_suite() -> SuiteReport {
    let mut rep = SuiteReport::new("concentration");
    let g = [1.0; 4];
    let subsets = all_subsets(4, 2);
    let exhaustive: f64 =
        subsets.iter().map(|s| 4.0 - s.len() as f64).sum::<f64>() / subsets.len() as f64;
    rep.check(
        "all-ones gradient gap, n = 4, tau = 2",
        exhaustive == 2.0 && expected_grad_gap(&g, 2) == 2.0,
        format!("exhaustive {exhaustive}, closed form {}", expected_grad_gap(&g, 2)),
    );

    let n = 50;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let gv: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut h = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-1.0..1.0);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    for tau in [1, 5, 25, 50] {
        let (mc_g, mc_h) = match concentration_probe(&gv, &h, tau, 100_000, &mut rng) {
            Ok(v) => v,
            Err(e) => {
                rep.check(format!("monte carlo tau = {tau}"), false, e.to_string());
                continue;
            }
        };
        let exact_g = expected_grad_gap(&gv, tau);
        let bound_h = hess_gap_bound(&h, tau);
        let rel = |a: f64, b: f64| if b == 0.0 { a.abs() } else { (a - b).abs() / b };
        rep.check(
            format!("gradient gap tau = {tau}"),
            rel(mc_g, exact_g) <= 0.01,
            format!("monte carlo {mc_g:.6}, identity {exact_g:.6}"),
        );
        rep.check(
            format!("hessian gap tau = {tau}"),
            rel(mc_h, bound_h) <= 0.02,
            format!("monte carlo {mc_h:.4}, (1 - p2)|H|_F^2 = {bound_h:.4}"),
        );
    }
    rep
}

fn gradcheck_suite() -> SuiteReport {
    let mut rep = SuiteReport::new("gradcheck");
    let obj = synthetic_logistic_fixture();
    let saddle = SaddleQuartic::new(6, 0.25).expect("valid");
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, o) in [("logistic", &obj as &dyn Objective), ("saddle quartic", &saddle)] {
        let n = o.dim();
        let (mut worst_g, mut worst_h) = (0.0f64, 0.0f64);
        for _ in 0..10 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s = sample_uniform(n, n.min(5), &mut rng).expect("valid tau");
            match finite_diff_check(o, &x, &s, 1e-5) {
                Ok(r) => {
                    worst_g = worst_g.max(r.grad_rel());
                    worst_h = worst_h.max(r.hess_rel());
                }
                Err(_) => worst_g = f64::INFINITY,
            }
        }
        rep.check(format!("{name} gradient"), worst_g <= 1e-6, format!("max relative error {worst_g:.3e}"));
        rep.check(format!("{name} hessian block"), worst_h <= 1e-4, format!("max relative error {worst_h:.3e}"));
    }
    rep
}

/// Runs SSCN with a fixed `M` and reports the smallest slack of
/// `f(x_k) − f(x_{k+1}) − (M/12)‖h_k‖³` over `iters` steps.
pub fn decrease_bound_slack(obj: &dyn Objective, m: f64, tau: usize, iters: usize, seed: u64) -> Result<f64, SscnError> {
    let n = obj.dim();
    let mut cfg = OptimizerConfig::new(SamplingSchedule::Constant { tau });
    cfg.m_policy = MPolicy::Fixed { m };
    cfg.curvature = CurvatureSource::ExactSubHessian;
    let mut state = StepState::new(&cfg.m_policy);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; n];
    let mut worst = f64::INFINITY;
    for _ in 0..iters {
        let s: CoordinateSubset = sample_uniform(n, tau, &mut rng)?;
        let out = sscn_step(obj, &x, &s, &cfg, &mut state)?;
        worst = worst.min(out.f_prev - out.f_next - m / 12.0 * out.step_norm.powi(3));
        x = out.x_next;
    }
    Ok(worst)
}

fn decrease_suite() -> SuiteReport {
    let mut rep = SuiteReport::new("lemma1");
    let obj = synthetic_logistic_fixture();
    let l2 = estimate_hessian_lipschitz(&obj, 1.0, 40, 10, 3);
    let m = 2.0 * l2;
    for tau in [5, 50] {
        match decrease_bound_slack(&obj, m, tau, 200, 5) {
            Ok(slack) => rep.check(
                format!("logistic decrease, tau = {tau}"),
                slack >= -1e-12,
                format!("M = {m:.4e}, min slack over 200 steps = {slack:.3e}"),
            ),
            Err(e) => rep.check(format!("logistic decrease, tau = {tau}"), false, e.to_string()),
        }
    }
    let saddle = SaddleQuartic::new(4, 0.25).expect("valid");
    // third derivative of the quartic is bounded by 24·s·‖x‖ on the iterates' ball
    let m = 40.0;
    match decrease_bound_slack(&saddle, m, 2, 100, 9) {
        Ok(slack) => rep.check("saddle quartic decrease", slack >= -1e-12, format!("min slack {slack:.3e}")),
        Err(e) => rep.check("saddle quartic decrease", false, e.to_string()),
    }
    let at_saddle = min_eigenvalue_sym(&saddle.hessian_full(&[0.0; 4]));
    rep.check("saddle fixture curvature", at_saddle == -2.0, format!("lambda_min at origin = {at_saddle}"));
    rep
}

//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so every status line is printed; exits nonzero if any check fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sscn::baselines::full_cubic_newton_run;
use sscn::bench::validate::synthetic_logistic_fixture;
use sscn::bench::{COMPARE_HEADER, TRACE_HEADER};
use sscn::model::{symmetrize, CubicModel, CurvatureSource};
use sscn::objectives::{
    estimate_hessian_lipschitz, finite_diff_check, min_eigenvalue_sym, Objective, Quadratic, SaddleQuartic,
};
use sscn::optimizer::{m_k_theory, run, sscn_step, MPolicy, OptimizerConfig, StepState, StopCriteria};
use sscn::subproblem::{brute_force_oracle, minimizer_norm_bound, solve_global};
use sscn::subset::{expected_hess_gap, sample_uniform, AdaptiveParams, SamplingSchedule};

type Outcome = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|t| t * t).sum::<f64>().sqrt()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

fn random_model(rng: &mut ChaCha8Rng, tau: usize) -> CubicModel {
    let g: Vec<f64> = (0..tau).map(|_| rng.random_range(-2.0..2.0)).collect();
    let a = DMatrix::from_fn(tau, tau, |_, _| rng.random_range(-2.0..2.0));
    CubicModel::from_parts(g, symmetrize(&a), rng.random_range(0.1..10.0)).unwrap()
}

fn c01_subproblem_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut gap, mut res, mut cert) = (f64::NEG_INFINITY, 0.0f64, f64::INFINITY);
    let mut indefinite = 0;
    for _ in 0..200 {
        let tau = rng.random_range(1..=3);
        let m = random_model(&mut rng, tau);
        if min_eigenvalue_sym(&m.q) < 0.0 {
            indefinite += 1;
        }
        let sol = solve_global(&m, 1e-5).map_err(|e| e.to_string())?;
        let points = [0, 4001, 401, 101][tau];
        let (_, oracle) = brute_force_oracle(&m, 1.05 * minimizer_norm_bound(&m) + 1e-3, points).map_err(|e| e.to_string())?;
        gap = gap.max(sol.model_value - oracle);
        res = res.max(sol.stationarity_residual / m.g.norm().max(1.0));
        let shifted = &m.q + DMatrix::identity(tau, tau) * (m.m / 2.0 * sol.r);
        cert = cert.min(min_eigenvalue_sym(&shifted));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        gap <= 1e-6 && res <= 1e-5 && cert >= -1e-8 && secs < 10.0,
        format!("value - oracle <= {gap:.2e}, residual <= {res:.2e}, certificate >= {cert:.2e}, {indefinite} indefinite, {secs:.2}s"),
    )
}

fn c02_hard_case() -> Outcome {
    let m = CubicModel::from_parts(vec![0.0], DMatrix::from_element(1, 1, -1.0), 2.0).unwrap();
    let s = solve_global(&m, 1e-5).map_err(|e| e.to_string())?;
    verdict(
        (s.r - 1.0).abs() <= 1e-10 && (s.model_value + 1.0 / 6.0).abs() <= 1e-10,
        format!("r = {}, model value = {}", s.r, s.model_value),
    )
}

fn c03_cd_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 8;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        // zero matrix: the subset gradient is b restricted to S
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let obj = Quadratic::new(DMatrix::zeros(n, n), b.clone()).unwrap();
        let tau = rng.random_range(1..=n);
        let s = sample_uniform(n, tau, &mut rng).unwrap();
        let m = rng.random_range(0.1..10.0);
        let mut cfg = OptimizerConfig::new(SamplingSchedule::Constant { tau });
        cfg.curvature = CurvatureSource::Zero;
        cfg.m_policy = MPolicy::Fixed { m };
        let mut st = StepState::new(&cfg.m_policy);
        let x = vec![0.0; n];
        let out = sscn_step(&obj, &x, &s, &cfg, &mut st).map_err(|e| e.to_string())?;
        let gs: Vec<f64> = s.indices().iter().map(|&i| b[i]).collect();
        let scale = (2.0 / (m * norm(&gs))).sqrt();
        for (a, &i) in s.indices().iter().enumerate() {
            worst = worst.max((out.x_next[i] - x[i] + scale * gs[a]).abs());
        }
    }
    verdict(worst <= 1e-10, format!("max deviation from -sqrt(2/(M|g|)) g = {worst:.2e}"))
}

fn c04_concentration() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 50;
    let g: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut h = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v: f64 = rng.random_range(-1.0..1.0);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    let g_sq: f64 = g.iter().map(|v| v * v).sum();
    let h_sq = h.norm_squared();
    let mut details = Vec::new();
    let mut ok = true;
    for tau in [1usize, 5, 25, 50] {
        let (mut acc_g, mut acc_h) = (0.0, 0.0);
        let draws = 100_000;
        for _ in 0..draws {
            let s = sample_uniform(n, tau, &mut rng).unwrap();
            let idx = s.indices();
            acc_g += g_sq - idx.iter().map(|&i| g[i] * g[i]).sum::<f64>();
            let mut kept = 0.0;
            for &i in idx {
                for &j in idx {
                    kept += h[(i, j)] * h[(i, j)];
                }
            }
            acc_h += h_sq - kept;
        }
        let (mc_g, mc_h) = (acc_g / draws as f64, acc_h / draws as f64);
        let (nf, tf) = (n as f64, tau as f64);
        let ref_g = (1.0 - tf / nf) * g_sq;
        let p2 = tf * (tf - 1.0) / (nf * (nf - 1.0));
        let ref_h = (1.0 - p2) * h_sq;
        let rel = |a: f64, b: f64| if b == 0.0 { a.abs() } else { (a - b).abs() / b };
        let (eg, eh) = (rel(mc_g, ref_g), rel(mc_h, ref_h));
        // diagonal entries survive with probability tau/n, not p2
        let ex = rel(mc_h, expected_hess_gap(&h, tau));
        ok &= eg <= 0.01 && eh <= 0.02 && ex <= 0.02;
        details.push(format!("tau={tau}: grad {eg:.1e}, hess {eh:.1e} (exact {ex:.1e})"));
    }
    // n = 4, tau = 2, all-ones gradient, every subset enumerated
    let subsets: Vec<u32> = (0u32..16).filter(|m| m.count_ones() == 2).collect();
    let exhaustive = subsets.iter().map(|m| (4 - m.count_ones()) as f64).sum::<f64>() / subsets.len() as f64;
    ok &= exhaustive == 2.0;
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 30.0;
    verdict(ok, format!("{}; n=4 exhaustive {exhaustive}; {secs:.2}s", details.join(", ")))
}

fn c05_decrease_bound() -> Outcome {
    let obj = synthetic_logistic_fixture();
    let l2 = estimate_hessian_lipschitz(&obj, 1.0, 40, 10, 5);
    let m = 2.0 * l2;
    let n = obj.dim();
    let mut cfg = OptimizerConfig::new(SamplingSchedule::Constant { tau: 10 });
    cfg.m_policy = MPolicy::Fixed { m };
    let mut st = StepState::new(&cfg.m_policy);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut x = vec![0.0; n];
    let mut worst = f64::INFINITY;
    for _ in 0..200 {
        let s = sample_uniform(n, 10, &mut rng).unwrap();
        let out = sscn_step(&obj, &x, &s, &cfg, &mut st).map_err(|e| e.to_string())?;
        worst = worst.min(out.f_prev - out.f_next - m / 12.0 * out.step_norm.powi(3));
        x = out.x_next;
    }
    verdict(worst >= -1e-12, format!("M = {m:.3e}, min slack of the decrease bound = {worst:.2e}"))
}

fn c06_full_cr_equivalence() -> Outcome {
    let obj = synthetic_logistic_fixture();
    let n = obj.dim();
    let mut cfg = OptimizerConfig::new(SamplingSchedule::Constant { tau: n });
    cfg.stop = StopCriteria { grad_tol: 1e-300, max_iters: 50, max_seconds: None };
    cfg.record_iterates = true;
    let a = run(&obj, &vec![0.0; n], &cfg).map_err(|e| e.to_string())?;
    let b = full_cubic_newton_run(&obj, &vec![0.0; n], &cfg).map_err(|e| e.to_string())?;
    if a.iterates.len() != 50 || b.iterates.len() != 50 {
        return Err(format!("iterate counts {} and {}", a.iterates.len(), b.iterates.len()));
    }
    let worst = a
        .iterates
        .iter()
        .zip(&b.iterates)
        .map(|(xa, xb)| xa.iter().zip(xb).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    verdict(worst <= 1e-10, format!("max per-iterate deviation over 50 iterations = {worst:.2e}"))
}

fn strictly_decreasing(f0: f64, fs: &[f64]) -> bool {
    let mut prev = f0;
    fs.iter().all(|&f| {
        let ok = f < prev;
        prev = f;
        ok
    })
}

fn c07_convergence() -> Outcome {
    let obj = synthetic_logistic_fixture();
    let n = obj.dim();
    let f0 = obj.value(&vec![0.0; n]);
    let mut details = Vec::new();
    let mut ok = true;
    for (tau, budget) in [(n, 200usize), (n / 2, 600)] {
        let mut iters = Vec::new();
        let mut monotone = true;
        for seed in 0..5 {
            let mut cfg = OptimizerConfig::new(SamplingSchedule::Constant { tau });
            cfg.stop = StopCriteria { grad_tol: 1e-6, max_iters: budget, max_seconds: None };
            cfg.full_grad_every = 1;
            cfg.seed = seed;
            let tr = run(&obj, &vec![0.0; n], &cfg).map_err(|e| e.to_string())?;
            let fs: Vec<f64> = tr.records.iter().map(|r| r.f_value).collect();
            monotone &= strictly_decreasing(f0, &fs);
            iters.push(tr.iterations_to(1e-6).map_or(f64::INFINITY, |k| k as f64));
        }
        let med = median(iters);
        ok &= med <= budget as f64 && monotone;
        details.push(format!("tau={tau}: median {med} iterations (budget {budget}), strictly decreasing {monotone}"));
    }
    verdict(ok, details.join("; "))
}

fn c08_rate_trend() -> Outcome {
    let obj = synthetic_logistic_fixture();
    let n = obj.dim();
    let mut meds = Vec::new();
    for tau in [5usize, 25, 50] {
        let mut iters = Vec::new();
        for seed in 0..5 {
            let mut cfg = OptimizerConfig::new(SamplingSchedule::Constant { tau });
            cfg.stop = StopCriteria { grad_tol: 1e-4, max_iters: 5000, max_seconds: None };
            cfg.full_grad_every = 1;
            cfg.seed = seed;
            let tr = run(&obj, &vec![0.0; n], &cfg).map_err(|e| e.to_string())?;
            iters.push(tr.iterations_to(1e-4).map_or(f64::INFINITY, |k| k as f64));
        }
        meds.push(median(iters));
    }
    verdict(meds[0] >= meds[1] && meds[1] >= meds[2], format!("median iterations for tau = 5, 25, 50: {meds:?}"))
}

fn c09_second_order() -> Outcome {
    let obj = SaddleQuartic::new(10, 0.25).unwrap();
    let mut good = 0;
    let mut worst_lam = f64::INFINITY;
    for seed in 0..10 {
        let mut cfg = OptimizerConfig::new(SamplingSchedule::Adaptive(AdaptiveParams { c: 1.0, ..AdaptiveParams::default() }));
        cfg.stop = StopCriteria { grad_tol: 1e-6, max_iters: 5000, max_seconds: None };
        cfg.full_grad_every = 1;
        cfg.seed = seed;
        let tr = run(&obj, &[1e-3; 10], &cfg).map_err(|e| e.to_string())?;
        let g = norm(&obj.grad_full(&tr.final_x));
        let lam = min_eigenvalue_sym(&obj.hessian_full(&tr.final_x));
        worst_lam = worst_lam.min(lam);
        if g <= 1e-6 && lam >= -1e-3 {
            good += 1;
        }
    }
    verdict(good >= 9, format!("{good}/10 runs second-order stationary, smallest terminal lambda_min = {worst_lam:.3e}"))
}

fn c10_theory_rule() -> Outcome {
    let exact = m_k_theory(0.0, 1.0, 1.0, 24.5);
    let obj = synthetic_logistic_fixture();
    let n = obj.dim();
    let l1 = obj.lipschitz().l1.ok_or("objective has no L1")?;
    let l2 = estimate_hessian_lipschitz(&obj, 1.0, 40, 10, 10);
    let mut cfg = OptimizerConfig::new(SamplingSchedule::Constant { tau: 10 });
    cfg.m_policy = MPolicy::TheoryRule { sigma: 0.0, l1, l2 };
    cfg.stop = StopCriteria { grad_tol: 1e-300, max_iters: 100, max_seconds: None };
    cfg.seed = 10;
    let tr = run(&obj, &vec![0.0; n], &cfg).map_err(|e| e.to_string())?;
    let violations = tr.records.iter().filter(|r| r.f_value > r.predicted_f || r.m_retries > 0).count();
    verdict(
        exact == Some(3.0) && violations == 0 && tr.records.len() == 100,
        format!("m_k_theory(0,1,1,24.5) = {exact:?}; {violations} progress violations in {} steps", tr.records.len()),
    )
}

fn c11_audits() -> Outcome {
    let obj = synthetic_logistic_fixture();
    let n = obj.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut wg, mut wh) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = sample_uniform(n, 8, &mut rng).unwrap();
        let r = finite_diff_check(&obj, &x, &s, 1e-5).map_err(|e| e.to_string())?;
        wg = wg.max(r.grad_rel());
        wh = wh.max(r.hess_rel());
    }
    verdict(wg <= 1e-6 && wh <= 1e-4, format!("max relative error: gradient {wg:.2e}, hessian block {wh:.2e}"))
}

fn sscn_bin(args: &[&str]) -> Result<std::process::Output, String> {
    Command::new(env!("CARGO_BIN_EXE_sscn")).args(args).output().map_err(|e| e.to_string())
}

fn check_csv_schema(path: &Path, header: &str) -> Result<usize, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = text.lines();
    if lines.next() != Some(header) {
        return Err(format!("{}: unexpected header", path.display()));
    }
    let cols = header.split(',').count();
    let numeric_from = header.split(',').position(|c| c == "seed").unwrap();
    let mut rows = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(format!("row with {} fields: {line}", fields.len()));
        }
        for (name, v) in header.split(',').zip(&fields).skip(numeric_from) {
            if !(v.is_empty() && name == "full_grad_norm") && v.parse::<f64>().is_err() {
                return Err(format!("column {name} holds non-numeric {v:?}"));
            }
        }
        rows += 1;
    }
    Ok(rows)
}

fn c12_harness() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = tmp.path();
    let mut notes = Vec::new();
    for suite in ["subproblem", "concentration", "gradcheck", "lemma1"] {
        let o = sscn_bin(&["--out", out.to_str().unwrap(), "validate", suite])?;
        if o.status.code() != Some(0) {
            return Err(format!("validate {suite} exited {:?}", o.status.code()));
        }
    }
    notes.push("validate suites exit 0".to_string());

    let cfg = out.join("fixture.toml");
    std::fs::write(
        &cfg,
        r#"
[objective]
kind = "synthetic_logistic"
samples = 100
features = 20
data_seed = 2

[stop]
max_iters = 60

[run]
seeds = [7]

[[method]]
kind = "cd"
tau = 4

[[method]]
kind = "sscn"
tau = 4
"#,
    )
    .map_err(|e| e.to_string())?;
    let cmp = out.join("cmp");
    let o = sscn_bin(&["--out", cmp.to_str().unwrap(), "compare", cfg.to_str().unwrap()])?;
    if o.status.code() != Some(0) {
        return Err(format!("compare exited {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)));
    }
    let rows = check_csv_schema(&cmp.join("compare.csv"), COMPARE_HEADER)?;
    notes.push(format!("compare.csv schema ok ({rows} rows)"));

    let mut traces = Vec::new();
    for rep in ["a", "b"] {
        let dir = out.join(rep);
        let o = sscn_bin(&["--out", dir.to_str().unwrap(), "--no-timing", "run", cfg.to_str().unwrap()])?;
        if o.status.code() != Some(0) {
            return Err(format!("run exited {:?}", o.status.code()));
        }
        let path = dir.join("sscn-seed7.csv");
        check_csv_schema(&path, TRACE_HEADER)?;
        traces.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    if traces[0] != traces[1] {
        return Err("repeated runs with the same seed differ".into());
    }
    notes.push("identical seeds give byte-identical traces".into());
    Ok(notes.join("; "))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("subproblem exactness", c01_subproblem_exactness),
        ("hard-case fixture", c02_hard_case),
        ("coordinate descent recovery", c03_cd_recovery),
        ("concentration identities", c04_concentration),
        ("cubic decrease bound", c05_decrease_bound),
        ("full cubic Newton equivalence", c06_full_cr_equivalence),
        ("convergence", c07_convergence),
        ("rate interpolation trend", c08_rate_trend),
        ("second-order stationarity", c09_second_order),
        ("theory-rule M", c10_theory_rule),
        ("gradient and hessian audits", c11_audits),
        ("harness contract", c12_harness),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(d) => println!("acceptance {:>2} PASS {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("acceptance {:>2} FAIL {name}: {d}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

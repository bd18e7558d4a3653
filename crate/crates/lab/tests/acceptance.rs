//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! straight to stdout (so it shows without `--nocapture`) and then asserts.
//! The tests hold a shared lock so timings are not disturbed by each other.

use std::io::Write;
use std::sync::Mutex;
use std::time::Instant;

use nalgebra::DMatrix;
use qff::bounds::{min_order_gprd, min_order_risk};
use qff::gp::{DerivObservationSet, ExactPosterior, FeaturePosterior};
use qff::hermite::gauss_hermite_rule;
use qff::ode::{generate_dataset, BenchmarkSystem, NoiseSpec};
use qff::odin::{fit_hyperparams, FitMode, OdinProblem, Risk};
use qff::{QffFeatureMap, RbfHyperparams};
use qff_lab::config::{BenchMode, HyperMode, Kind, Noise};
use qff_lab::table::Table;
use qff_lab::{commands, Context, ExperimentConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

static SERIAL: Mutex<()> = Mutex::new(());

fn report(name: &str, pass: bool, detail: &str, started: Instant, budget_s: f64) {
    let secs = started.elapsed().as_secs_f64();
    let ok = pass && secs < budget_s;
    let verdict = if ok { "PASS" } else { "FAIL" };
    let line = format!("acceptance {name}: {verdict} ({detail}; {secs:.1} s, budget {budget_s} s)\n");
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(ok, "{line}");
}

fn uniform(rng: &mut ChaCha20Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn ctx(dir: &tempfile::TempDir) -> Context {
    Context { out: Some(dir.path().to_path_buf()), ..Default::default() }
}

fn lv_config(n: usize, seeds: std::ops::Range<u64>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.n = n;
    cfg.seeds = seeds.collect();
    cfg.noise = Noise { variance: Some(0.1), snr: None };
    cfg
}

#[test]
fn quadrature_exactness() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    // Absolute moments a_k = int |x|^k exp(-x^2) dx via a_{k+2} = (k+1)/2 a_k.
    let mut a = vec![std::f64::consts::PI.sqrt(), 1.0];
    for k in 0..126 {
        a.push((k as f64 + 1.0) / 2.0 * a[k]);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for m in [2, 4, 8, 16, 32, 64] {
        let rule = gauss_hermite_rule(m).unwrap();
        for _ in 0..50 {
            // Coefficients normalized so every monomial contributes O(1).
            let u: Vec<f64> = (0..2 * m).map(|_| uniform(&mut rng, -1.0, 1.0)).collect();
            let c: Vec<f64> = u.iter().zip(&a).map(|(u, a)| u / a).collect();
            let exact: f64 = (0..2 * m).step_by(2).map(|k| c[k] * a[k]).sum();
            let scale: f64 = u.iter().map(|v| v.abs()).sum();
            let quad: f64 = rule
                .nodes()
                .iter()
                .zip(rule.weights())
                .map(|(x, w)| w * c.iter().enumerate().map(|(k, ck)| ck * x.powi(k as i32)).sum::<f64>())
                .sum();
            worst = worst.max((quad - exact).abs() / scale);
        }
    }
    report("quadrature-exactness", worst <= 1e-10, &format!("worst relative error {worst:.2e}"), t0, 5.0);
}

#[test]
fn kernel_error_bounds_hold() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.kernel_sweep.lengthscales = vec![0.05, 0.1, 0.5];
    cfg.kernel_sweep.orders = (1..=16).map(|i| 8 * i).collect();
    cfg.kernel_sweep.grid = 1001;
    cfg.kernel_sweep.kinds = vec![Kind::Qff];
    let t = commands::kernel_sweep(&cfg, &ctx(&dir)).unwrap();
    let errs = ["err_k", "err_k1", "err_k2"];
    let bounds = ["bound_k", "bound_k1", "bound_k2"];
    let violations = t.select(|t, i| t.str(i, "within_bound") != "true").count();
    let below_roundoff = t.select(|t, i| (0..3).any(|j| t.f64(i, errs[j]) > t.f64(i, bounds[j]))).count();

    // Decade per +8 in m while the error is between the trivial plateau and
    // the round-off floor, for l = 0.1.
    let rho = cfg.kernel_sweep.variance;
    let l = 0.1;
    let rows: Vec<usize> = t.select(|t, i| t.f64(i, "l") == l).collect();
    let mut checks = 0;
    let mut slow = Vec::new();
    for (j, scale) in [rho, rho / l, rho / (l * l)].into_iter().enumerate() {
        for w in rows.windows(2) {
            let (e0, e1) = (t.f64(w[0], errs[j]), t.f64(w[1], errs[j]));
            if (1e-11..0.1).contains(&(e0 / scale)) {
                checks += 1;
                if (e0 / e1).log10() < 1.0 {
                    slow.push((errs[j], t.f64(w[0], "m")));
                }
            }
        }
    }
    let pass = violations == 0 && slow.is_empty() && checks >= 9;
    let detail = format!(
        "{} entries, {violations} violations, {below_roundoff} at the round-off allowance, {checks} decay steps, slow {slow:?}",
        t.rows.len()
    );
    report("kernel-error-bounds", pass, &detail, t0, 30.0);
}

/// `y = a sin(w t + c)`, `F = y'` on `[0, 1]` with Gaussian noise.
fn sinusoid_obs(n: usize, seed: u64, sigma2: f64, gamma: f64) -> DerivObservationSet {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (a, w, c) = (uniform(&mut rng, 1.0, 2.0), uniform(&mut rng, 8.0, 14.0), uniform(&mut rng, 0.0, 3.0));
    let t: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let mut noise = |v: f64| v.sqrt() * rng.sample::<f64, _>(StandardNormal);
    let y = t.iter().map(|s| a * (w * s + c).sin() + noise(sigma2)).collect();
    let f = t.iter().map(|s| a * w * (w * s + c).cos() + noise(gamma)).collect();
    DerivObservationSet::new(t, y, f, sigma2, gamma).unwrap()
}

#[test]
fn posterior_error_bound_and_decay() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let (sigma2, gamma, tol) = (0.01, 0.1, 1e-2);
    let mut worst = 0.0f64;
    let mut orders = Vec::new();
    let mut lengthscales_ok = true;
    for seed in 0..5 {
        let obs = sinusoid_obs(200, seed, sigma2, gamma);
        let hyper = fit_hyperparams(&obs.y, &obs.times, FitMode::Exact).unwrap().hyper;
        lengthscales_ok &= (0.05..=0.5).contains(&hyper.lengthscale);
        let m = min_order_gprd(hyper.lengthscale, hyper.variance, 200, sigma2.min(gamma), obs.max_abs(), tol).unwrap();
        orders.push((hyper.lengthscale, m));
        let exact = ExactPosterior::fit(&obs, hyper).unwrap();
        let approx = FeaturePosterior::fit(&obs, QffFeatureMap::new(hyper, m).unwrap()).unwrap();
        for i in 0..=100 {
            let tau = i as f64 / 100.0;
            worst = worst.max(exact.query(tau).max_abs_diff(&approx.query(tau)));
        }
    }

    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.system = "lorenz".into();
    cfg.n = 1000;
    cfg.seeds = (0..5).collect();
    cfg.noise = Noise { variance: None, snr: Some(100.0) };
    cfg.posterior_sweep.orders = vec![16, 96];
    cfg.posterior_sweep.taus = vec![0.8];
    cfg.posterior_sweep.kinds = vec![Kind::Qff];
    let t = commands::posterior_sweep(&cfg, &ctx(&dir)).unwrap();
    let med = |m: f64, col: &str| {
        let i = t.select(|t, i| t.f64(i, "m") == m && t.str(i, "stat") == "median").next().unwrap();
        t.f64(i, col)
    };
    let decades: Vec<f64> =
        ["e_mu", "e_sigma", "e_mu1", "e_sigma1"].iter().map(|c| (med(16.0, c) / med(96.0, c)).log10()).collect();
    let min_decades = decades.iter().copied().fold(f64::INFINITY, f64::min);

    let pass = worst <= tol && lengthscales_ok && min_decades >= 6.0;
    let detail = format!(
        "worst e_tot {worst:.2e} with (l, m) {orders:.3?}; lorenz decay 16->96 in decades {decades:.1?}"
    );
    report("posterior-error-bound", pass, &detail, t0, 300.0);
}

fn lv_problem(n: usize, seed: u64) -> OdinProblem<BenchmarkSystem> {
    let d = generate_dataset(BenchmarkSystem::LotkaVolterra, n, NoiseSpec::Variance(0.1), seed).unwrap();
    let hy = vec![RbfHyperparams::new(10.0, 0.2).unwrap(), RbfHyperparams::new(3.0, 0.2).unwrap()];
    OdinProblem::new(BenchmarkSystem::LotkaVolterra, d.times, d.y, hy, vec![0.1, 0.1], false).unwrap()
}

fn random_point(rng: &mut ChaCha20Rng, prob: &OdinProblem<BenchmarkSystem>) -> (DMatrix<f64>, Vec<f64>) {
    let x = DMatrix::from_fn(prob.len(), 2, |i, j| prob.y[(i, j)] + uniform(rng, -0.5, 0.5));
    let theta = (0..4).map(|_| uniform(rng, 0.5, 4.5)).collect();
    (x, theta)
}

#[test]
fn risk_relative_error_bound() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let mut violations = 0;
    let mut summary = Vec::new();
    for n in [60, 100] {
        let prob = lv_problem(n, n as u64);
        let exact = Risk::exact(&prob).unwrap();
        for eps in [0.5, 0.1] {
            let m = prob
                .hypers
                .iter()
                .zip(&prob.jitter)
                .zip(&prob.gamma)
                .map(|((h, &j), &g)| min_order_risk(h.lengthscale, h.variance, j, g, n, eps).unwrap())
                .max()
                .unwrap();
            let approx = Risk::qff(&prob, m).unwrap();
            let mut worst = 0.0f64;
            for _ in 0..100 {
                let (x, theta) = random_point(&mut rng, &prob);
                let r = exact.value(&x, &theta).unwrap().total;
                let ra = approx.value(&x, &theta).unwrap().total;
                let rel = ((r - ra) / r).abs();
                worst = worst.max(rel);
                violations += usize::from(rel > eps);
            }
            summary.push(format!("N={n} eps={eps} m={m} worst {worst:.1e}"));
        }
    }
    report("risk-relative-error", violations == 0, &format!("{violations} violations; {}", summary.join(", ")), t0, 180.0);
}

#[test]
fn high_order_features_match_exact() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let hyper = RbfHyperparams::new(1.0, 0.2).unwrap();
    let mut post_worst = 0.0f64;
    for seed in 0..3 {
        let obs = sinusoid_obs(100, 10 + seed, 0.01, 0.1);
        let exact = ExactPosterior::fit(&obs, hyper).unwrap();
        let approx = FeaturePosterior::fit(&obs, QffFeatureMap::new(hyper, 256).unwrap()).unwrap();
        for i in 0..=100 {
            let tau = i as f64 / 100.0;
            post_worst = post_worst.max(exact.query(tau).max_abs_diff(&approx.query(tau)));
        }
    }
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    let mut risk_worst = 0.0f64;
    let prob = lv_problem(100, 3);
    let exact = Risk::exact(&prob).unwrap();
    let approx = Risk::qff(&prob, 256).unwrap();
    for _ in 0..20 {
        let (x, theta) = random_point(&mut rng, &prob);
        let r = exact.value(&x, &theta).unwrap().total;
        let ra = approx.value(&x, &theta).unwrap().total;
        risk_worst = risk_worst.max(((r - ra) / r).abs());
    }
    let pass = post_worst <= 1e-8 && risk_worst <= 1e-8;
    let detail = format!("posterior max abs diff {post_worst:.1e}, risk max rel diff {risk_worst:.1e}");
    report("oracle-equivalence", pass, &detail, t0, 60.0);
}

fn column(t: &Table, name: &str, rows: impl Iterator<Item = usize>) -> Vec<f64> {
    rows.map(|i| t.f64(i, name)).collect()
}

#[test]
fn odin_features_track_exact_and_learn_with_data() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = lv_config(100, 0..5);
    cfg.features.count = 80;
    let feat = commands::odin_run(&cfg, &ctx(&dir)).unwrap();
    let exact = commands::odin_run(&cfg, &Context { force_exact: true, ..ctx(&dir) }).unwrap();
    let tq = column(&feat.runs, "trmse", 0..5);
    let te = column(&exact.runs, "trmse", 0..5);
    let rel: Vec<f64> = tq.iter().zip(&te).map(|(q, e)| (q / e - 1.0).abs()).collect();
    let paired = rel.iter().all(|r| *r <= 0.1);

    cfg.n = 1000;
    let big = commands::odin_run(&cfg, &ctx(&dir)).unwrap();
    let med_small = qff_lab::stats::median(&tq);
    let med_big = qff_lab::stats::median(&column(&big.runs, "trmse", 0..5));
    let pass = paired && med_big <= med_small;
    let gaps: Vec<String> = rel.iter().map(|r| format!("{r:.1e}")).collect();
    let detail = format!(
        "N=100 exact vs m=40 relative tRMSE gaps [{}]; median tRMSE N=100 {med_small:.3e}, N=1000 {med_big:.3e}",
        gaps.join(", ")
    );
    report("odin-end-to-end", pass, &detail, t0, 900.0);
}

#[test]
fn feature_path_scaling() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();

    // Per-iteration optimizer time with gamma learned, N = 1000, m = 40.
    let mut cfg = lv_config(1000, 0..1);
    cfg.learn_gamma = true;
    cfg.features.count = 80;
    cfg.odin.max_iter = 20;
    let feat = commands::odin_run(&cfg, &ctx(&dir)).unwrap();
    let exact = commands::odin_run(&cfg, &Context { force_exact: true, ..ctx(&dir) }).unwrap();
    let iters = exact.runs.f64(0, "iterations").min(feat.runs.f64(0, "iterations"));
    let speedup = exact.runs.f64(0, "iter_ms_median") / feat.runs.f64(0, "iter_ms_median");

    let mut b = lv_config(1000, 0..1);
    b.hyper.mode = HyperMode::Fixed;
    b.hyper.values = vec![[10.0, 0.2], [3.0, 0.2]];
    b.bench.mode = BenchMode::Observations;
    b.bench.ladder = vec![2000, 4000, 8000, 16000];
    b.bench.order = 40;
    b.bench.repeats = 15;
    let slope_n = commands::bench(&b, &ctx(&dir)).unwrap().slope;
    b.bench.mode = BenchMode::Features;
    b.bench.ladder = vec![64, 128, 256, 512];
    b.bench.n = 1000;
    b.bench.repeats = 5;
    let slope_m = commands::bench(&b, &ctx(&dir)).unwrap().slope;

    let pass = iters >= 15.0 && speedup >= 10.0 && (0.7..=1.5).contains(&slope_n) && (2.0..=3.5).contains(&slope_m);
    let detail = format!("speedup {speedup:.0}x over {iters} iterations, slope vs N {slope_n:.2}, slope vs m {slope_m:.2}");
    report("complexity", pass, &detail, t0, 600.0);
}

#[test]
fn risk_gradients_match_finite_differences() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(17);
    let mut worst = 0.0f64;
    for learn in [false, true] {
        let mut prob = lv_problem(20, 6);
        prob.learn_gamma = learn;
        let risk = Risk::qff(&prob, 24).unwrap();
        for _ in 0..10 {
            let (x, theta) = random_point(&mut rng, &prob);
            let gamma = [uniform(&mut rng, 0.05, 0.5), uniform(&mut rng, 0.05, 0.5)];
            let (_, g) = risk.value_and_gradient(&x, &theta, Some(&gamma)).unwrap();
            let f = |x: &DMatrix<f64>, th: &[f64], ga: &[f64]| risk.value_at(x, th, ga).unwrap().total;
            let scale = g.x.amax().max(g.theta.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            let rel = |fd: f64, an: f64| (fd - an).abs() / an.abs().max(1e-3 * scale);
            // Risk values reach 1e6 here, so smaller steps lose the
            // difference to cancellation.
            for i in 0..x.nrows() {
                for j in 0..2 {
                    let h = 1e-4 * (1.0 + x[(i, j)].abs());
                    let (mut xp, mut xm) = (x.clone(), x.clone());
                    xp[(i, j)] += h;
                    xm[(i, j)] -= h;
                    worst = worst.max(rel((f(&xp, &theta, &gamma) - f(&xm, &theta, &gamma)) / (2.0 * h), g.x[(i, j)]));
                }
            }
            for c in 0..4 {
                let h = 1e-4 * (1.0 + theta[c].abs());
                let (mut tp, mut tm) = (theta.clone(), theta.clone());
                tp[c] += h;
                tm[c] -= h;
                worst = worst.max(rel((f(&x, &tp, &gamma) - f(&x, &tm, &gamma)) / (2.0 * h), g.theta[c]));
            }
            if learn {
                for d in 0..2 {
                    let h = 1e-5f64;
                    let (mut gp, mut gm) = (gamma.to_vec(), gamma.to_vec());
                    gp[d] *= h.exp();
                    gm[d] *= (-h).exp();
                    worst = worst.max(rel((f(&x, &theta, &gp) - f(&x, &theta, &gm)) / (2.0 * h), g.log_gamma[d]));
                }
            }
        }
    }
    report("gradient-check", worst <= 1e-4, &format!("worst relative error {worst:.1e}"), t0, 60.0);
}

#[test]
fn quadrocopter_smoke_run() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.system = "quadrocopter".into();
    cfg.n = 1500;
    cfg.noise = Noise { variance: None, snr: Some(10.0) };
    cfg.odin.max_iter = 500;
    let out = commands::odin_run(&cfg, &ctx(&dir)).unwrap();
    let trmse = out.runs.f64(0, "trmse");
    let detail = format!("status {}, tRMSE {trmse:.3e}", out.runs.str(0, "status"));
    report("quadrocopter-smoke", trmse.is_finite(), &detail, t0, 300.0);
}

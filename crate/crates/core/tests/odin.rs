use nalgebra::{DMatrix, DVector};
use qff::bounds::min_order_risk;
use qff::ode::{generate_dataset, BenchmarkSystem, NoiseSpec, RealRhs};
use qff::odin::{
    fit_hyperparams, marginal_nll_exact, marginal_nll_features, optimize, FitMode, OdinProblem, OptimizeOptions, Risk,
};
use qff::optim::Termination;
use qff::real::Real;
use qff::{QffFeatureMap, RbfHyperparams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// `x' = theta x`.
struct Linear;

impl RealRhs for Linear {
    fn state_dim(&self) -> usize {
        1
    }
    fn param_dim(&self) -> usize {
        1
    }
    fn eval<T: Real>(&self, x: &[T], theta: &[T], out: &mut [T]) -> qff::Result<()> {
        out[0] = theta[0] * x[0];
        Ok(())
    }
}

fn h(rho: f64, l: f64) -> RbfHyperparams {
    RbfHyperparams::new(rho, l).unwrap()
}

fn uniform(rng: &mut ChaCha20Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Risk of the linear toy problem assembled densely with explicit inverses.
/// Returns the total without and with the log-determinant.
fn dense_linear_risk(p: &RbfHyperparams, t: &[f64], lambda: f64, y: &[f64], sigma2: f64, gamma: f64, x: &[f64], theta: f64) -> (f64, f64) {
    let n = t.len();
    let scale = t[n - 1] - t[0];
    let u: Vec<f64> = t.iter().map(|v| (v - t[0]) / scale).collect();
    let (rho, l) = (p.variance, p.lengthscale);
    let e = |r: f64| (-r * r / (2.0 * l * l)).exp();
    let c = DMatrix::from_fn(n, n, |i, j| rho * e(u[i] - u[j]));
    let pc = DMatrix::from_fn(n, n, |i, j| -rho * (u[i] - u[j]) / (l * l) * e(u[i] - u[j]));
    let cp = -&pc;
    let cpp = DMatrix::from_fn(n, n, |i, j| {
        let r = u[i] - u[j];
        rho * (1.0 / (l * l) - r * r / l.powi(4)) * e(r)
    });
    let kinv = (c + DMatrix::identity(n, n) * lambda).try_inverse().unwrap();
    let d = &pc * &kinv;
    let a = cpp - &pc * &kinv * &cp;
    let ag = &a + DMatrix::identity(n, n) * gamma;
    let ag_inv = ag.clone().try_inverse().unwrap();
    let xv = DVector::from_column_slice(x);
    let yv = DVector::from_column_slice(y);
    let f = DVector::from_iterator(n, x.iter().map(|v| scale * theta * v));
    let z = f - &d * &xv;
    let total = (xv.transpose() * &kinv * &xv)[0]
        + (&xv - &yv).norm_squared() / sigma2
        + (z.transpose() * &ag_inv * &z)[0];
    (total, total + ag.determinant().ln())
}

#[test]
fn linear_toy_matches_dense_oracle() {
    let p = h(1.3, 0.6);
    let times = vec![0.0, 1.0, 2.0];
    let y = vec![1.0, 0.6, 0.35];
    let (sigma2, gamma, lambda) = (0.05, 0.2, 1e-3);
    for learn in [false, true] {
        let prob = OdinProblem::new(Linear, times.clone(), DMatrix::from_column_slice(3, 1, &y), vec![p], vec![sigma2], learn)
            .unwrap()
            .with_gamma(vec![gamma])
            .unwrap()
            .with_jitter(vec![lambda])
            .unwrap();
        let risk = Risk::exact(&prob).unwrap();
        for (x, theta) in [([1.1, 0.5, 0.3], -0.5), ([0.2, -0.4, 0.9], 1.7)] {
            let v = risk.value(&DMatrix::from_column_slice(3, 1, &x), &[theta]).unwrap();
            let (plain, with_logdet) = dense_linear_risk(&p, &times, lambda, &y, sigma2, gamma, &x, theta);
            let want = if learn { with_logdet } else { plain };
            assert!((v.total - want).abs() < 1e-9 * want.abs(), "learn={learn}: {} vs {want}", v.total);
            assert!(v.prior_term >= 0.0 && v.obs_term >= 0.0 && v.deriv_term >= 0.0);
            let sum = v.prior_term + v.obs_term + v.deriv_term + v.logdet_term;
            assert!((v.total - sum).abs() < 1e-12 * v.total.abs());
        }
    }
}

#[test]
fn zero_states_and_data_give_zero_risk() {
    let d = generate_dataset(BenchmarkSystem::LotkaVolterra, 30, NoiseSpec::Variance(0.0), 0).unwrap();
    let zeros = DMatrix::zeros(30, 2);
    let hy = vec![h(1.0, 0.2), h(1.0, 0.2)];
    let prob = OdinProblem::new(BenchmarkSystem::LotkaVolterra, d.times.clone(), zeros.clone(), hy, vec![0.1, 0.1], false).unwrap();
    for risk in [Risk::exact(&prob).unwrap(), Risk::qff(&prob, 20).unwrap()] {
        let v = risk.value(&zeros, &[2.0, 1.0, 4.0, 1.0]).unwrap();
        assert_eq!((v.prior_term, v.obs_term, v.deriv_term, v.total), (0.0, 0.0, 0.0, 0.0));
    }
}

fn lv_problem(n: usize, seed: u64, learn: bool) -> OdinProblem<BenchmarkSystem> {
    let d = generate_dataset(BenchmarkSystem::LotkaVolterra, n, NoiseSpec::Variance(0.1), seed).unwrap();
    let hy = vec![h(10.0, 0.2), h(3.0, 0.2)];
    OdinProblem::new(BenchmarkSystem::LotkaVolterra, d.times, d.y, hy, vec![0.1, 0.1], learn).unwrap()
}

fn random_point(rng: &mut ChaCha20Rng, prob: &OdinProblem<BenchmarkSystem>) -> (DMatrix<f64>, Vec<f64>) {
    let x = DMatrix::from_fn(prob.len(), 2, |i, j| prob.y[(i, j)] + uniform(rng, -0.5, 0.5));
    let theta = (0..4).map(|_| uniform(rng, 0.5, 4.5)).collect();
    (x, theta)
}

#[test]
fn logdet_flag_only_adds_the_logdet() {
    let plain = lv_problem(40, 1, false);
    let learned = lv_problem(40, 1, true);
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for use_features in [false, true] {
        let (r0, r1) = if use_features {
            (Risk::qff(&plain, 30).unwrap(), Risk::qff(&learned, 30).unwrap())
        } else {
            (Risk::exact(&plain).unwrap(), Risk::exact(&learned).unwrap())
        };
        let (x, theta) = random_point(&mut rng, &plain);
        let a = r0.value(&x, &theta).unwrap();
        let b = r1.value(&x, &theta).unwrap();
        let logdet: f64 = r1
            .operators()
            .iter()
            .zip(&learned.gamma)
            .map(|(op, &g)| {
                let (_, am) = op.dense_d_a();
                let n = am.nrows();
                (am + DMatrix::identity(n, n) * g).cholesky().unwrap().l().diagonal().map(|v| 2.0 * v.ln()).sum()
            })
            .sum();
        assert_eq!(a.logdet_term, 0.0);
        assert!((b.total - a.total - logdet).abs() < 1e-6 * b.total.abs(), "{} {} {logdet}", a.total, b.total);
        assert_eq!((a.prior_term, a.obs_term, a.deriv_term), (b.prior_term, b.obs_term, b.deriv_term));
    }
}

#[test]
fn derivative_term_at_zero_states_uses_the_raw_model() {
    // With x = 0 the mismatch is z = F - D 0 = F.
    let prob = OdinProblem::new(Linear, vec![0.0, 0.5, 1.0, 1.5], DMatrix::from_element(4, 1, 0.3), vec![h(1.0, 0.4)], vec![0.1], false).unwrap();
    let risk = Risk::exact(&prob).unwrap();
    let zero = DMatrix::zeros(4, 1);
    let v = risk.value(&zero, &[2.0]).unwrap();
    assert_eq!(v.deriv_term, 0.0);
    assert!((v.obs_term - 4.0 * 0.09 / 0.1).abs() < 1e-12);
}

fn finite_difference_check(risk: &Risk<'_, BenchmarkSystem>, x: &DMatrix<f64>, theta: &[f64], gamma: &[f64]) -> f64 {
    let (_, g) = risk.value_and_gradient(x, theta, Some(gamma)).unwrap();
    let f = |x: &DMatrix<f64>, th: &[f64], ga: &[f64]| risk.value_at(x, th, ga).unwrap().total;
    let mut worst = 0.0f64;
    let rel = |fd: f64, an: f64, scale: f64| (fd - an).abs() / (an.abs().max(1e-3 * scale));
    let scale = g.x.amax().max(g.theta.iter().fold(0.0, |m: f64, v| m.max(v.abs())));
    for i in (0..x.nrows()).step_by(3) {
        for j in 0..x.ncols() {
            let hh = 1e-6 * (1.0 + x[(i, j)].abs());
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[(i, j)] += hh;
            xm[(i, j)] -= hh;
            let fd = (f(&xp, theta, gamma) - f(&xm, theta, gamma)) / (2.0 * hh);
            worst = worst.max(rel(fd, g.x[(i, j)], scale));
        }
    }
    for c in 0..theta.len() {
        let hh = 1e-6 * (1.0 + theta[c].abs());
        let (mut tp, mut tm) = (theta.to_vec(), theta.to_vec());
        tp[c] += hh;
        tm[c] -= hh;
        let fd = (f(x, &tp, gamma) - f(x, &tm, gamma)) / (2.0 * hh);
        worst = worst.max(rel(fd, g.theta[c], scale));
    }
    if risk.problem().learn_gamma {
        for d in 0..gamma.len() {
            let hh: f64 = 1e-5;
            let (mut gp, mut gm) = (gamma.to_vec(), gamma.to_vec());
            gp[d] *= hh.exp();
            gm[d] *= (-hh).exp();
            let fd = (f(x, theta, &gp) - f(x, theta, &gm)) / (2.0 * hh);
            worst = worst.max(rel(fd, g.log_gamma[d], scale));
        }
    }
    worst
}

#[test]
fn gradients_match_finite_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    for learn in [false, true] {
        let prob = lv_problem(20, 4, learn);
        for risk in [Risk::qff(&prob, 24).unwrap(), Risk::exact(&prob).unwrap()] {
            for _ in 0..3 {
                let (x, theta) = random_point(&mut rng, &prob);
                let gamma = [uniform(&mut rng, 0.05, 0.5), uniform(&mut rng, 0.05, 0.5)];
                let e = finite_difference_check(&risk, &x, &theta, &gamma);
                assert!(e <= 1e-4, "learn={learn}: relative error {e:e}");
            }
        }
    }
}

#[test]
fn feature_risk_within_relative_bound() {
    let mut rng = ChaCha20Rng::seed_from_u64(21);
    let prob = lv_problem(60, 2, false);
    let eps = 0.5;
    let m = prob
        .hypers
        .iter()
        .zip(&prob.jitter)
        .zip(&prob.gamma)
        .map(|((hy, &j), &g)| min_order_risk(hy.lengthscale, hy.variance, j, g, 60, eps).unwrap())
        .max()
        .unwrap();
    let exact = Risk::exact(&prob).unwrap();
    let approx = Risk::qff(&prob, m).unwrap();
    for _ in 0..10 {
        let (x, theta) = random_point(&mut rng, &prob);
        let r = exact.value(&x, &theta).unwrap().total;
        let ra = approx.value(&x, &theta).unwrap().total;
        assert!(((r - ra) / r).abs() <= eps, "m={m}: {r} vs {ra}");
    }
}

#[test]
fn zero_data_drives_noise_to_its_floor() {
    let t: Vec<f64> = (0..40).map(|i| i as f64 / 39.0).collect();
    let fit = fit_hyperparams(&vec![0.0; 40], &t, FitMode::Exact).unwrap();
    // The box is scaled by mean(y^2), which falls back to 1 for zero data.
    assert!(fit.sigma2 <= 1.01e-8, "{}", fit.sigma2);
    assert!(fit_hyperparams(&[1.0, 2.0], &[0.0, 1.0], FitMode::Exact).is_err());
}

#[test]
fn feature_likelihood_matches_exact() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let t: Vec<f64> = (0..200).map(|i| i as f64 / 199.0).collect();
    let y: Vec<f64> = t.iter().map(|s| (5.0 * s).sin() + 0.1 * uniform(&mut rng, -1.0, 1.0)).collect();
    for _ in 0..5 {
        let hy = h(uniform(&mut rng, 0.3, 3.0), uniform(&mut rng, 0.1, 0.6));
        let s2 = uniform(&mut rng, 1e-3, 0.1);
        let a = marginal_nll_exact(&y, &t, &hy, s2).unwrap();
        let b = marginal_nll_features(&y, &t, &QffFeatureMap::new(hy, 128).unwrap(), s2).unwrap();
        assert!(((a - b) / a).abs() < 1e-6, "{hy:?} s2={s2}: {a} vs {b}");
    }
}

#[test]
fn gp_draws_recover_the_lengthscale() {
    let n = 500;
    let t: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let truth = h(1.0, 0.2);
    let mut k = DMatrix::from_fn(n, n, |i, j| truth.eval(t[i] - t[j]));
    for i in 0..n {
        k[(i, i)] += 1e-8;
    }
    let chol = k.cholesky().unwrap();
    for seed in 0..10 {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        let f = chol.l() * z;
        let y: Vec<f64> = f.iter().map(|v| v + 0.1 * rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        let fit = fit_hyperparams(&y, &t, FitMode::Features { order: 64 }).unwrap();
        let l = fit.hyper.lengthscale;
        assert!((l - 0.2).abs() <= 0.3 * 0.2, "seed {seed}: l = {l}");
    }
}

#[test]
fn optimizer_trace_restart_and_recovery() {
    let d = generate_dataset(BenchmarkSystem::LotkaVolterra, 100, NoiseSpec::Variance(0.1), 0).unwrap();
    let (unit, _, _) = qff::odin::rescale_times(&d.times).unwrap();
    let hy: Vec<RbfHyperparams> = (0..2)
        .map(|k| {
            let col: Vec<f64> = d.y.column(k).iter().copied().collect();
            fit_hyperparams(&col, &unit, FitMode::Exact).unwrap().hyper
        })
        .collect();
    let prob = OdinProblem::new(BenchmarkSystem::LotkaVolterra, d.times.clone(), d.y.clone(), hy, vec![0.1, 0.1], false).unwrap();
    let risk = Risk::exact(&prob).unwrap();
    let opts = OptimizeOptions::default();
    let fit = optimize(&risk, &d.y, &[1.0; 4], &opts, |_, _| {}).unwrap();
    assert!(fit.risk_trace.windows(2).all(|w| w[1] <= w[0]), "trace increased");
    assert_ne!(fit.termination, Termination::MaxIter);
    let trmse = d.trajectory_rmse(&fit.theta).unwrap();
    assert!(trmse < 0.1f64.sqrt(), "tRMSE {trmse}");

    let again = optimize(&risk, &fit.x, &fit.theta, &opts, |_, _| {}).unwrap();
    assert!(again.iterations <= 2, "{} iterations", again.iterations);
    assert!((again.risk.total - fit.risk.total).abs() < 1e-8 * fit.risk.total.abs().max(1.0));
}

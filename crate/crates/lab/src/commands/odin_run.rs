use std::time::Instant;

use qff::features::feature_map_of_order;
use qff::ode::{generate_dataset, BenchmarkSystem, Dataset};
use qff::odin::{optimize, OdinFit, OdinProblem, OptimizeOptions, Risk};
use qff::optim::LbfgsOptions;
use rayon::prelude::*;
use serde_json::json;

use super::{hyperparams_for, Context, EXACT_REFERENCE_MAX_N};
use crate::config::{ExperimentConfig, Kind};
use crate::error::{LabError, Result};
use crate::stats::{median, quantile, std_dev};
use crate::table::{write_table, Cell, Table};

#[derive(Debug, Clone)]
pub struct OdinRunOutput {
    /// One row per seed and configuration.
    pub runs: Table,
    /// Medians and 20%/80% quantiles over successful seeds.
    pub summary: Table,
    /// Risk after every accepted optimizer step.
    pub trace: Table,
}

struct RunResult {
    seed: u64,
    kind: Kind,
    m: usize,
    outcome: std::result::Result<Success, String>,
}

struct Success {
    fit: OdinFit,
    trmse: f64,
    /// Milliseconds between consecutive accepted steps.
    iter_ms: Vec<f64>,
    /// `|R_features - R_exact| / R_exact` at the returned point.
    risk_rel_err: f64,
}

fn run_one(
    cfg: &ExperimentConfig,
    d: &Dataset,
    prob: &OdinProblem<BenchmarkSystem>,
    kind: Kind,
    m: usize,
    seed: u64,
) -> Result<Success> {
    let risk = match kind.feature_kind() {
        None => Risk::exact(prob)?,
        Some(fk) => {
            let mats = prob
                .hypers
                .iter()
                .map(|h| Ok(feature_map_of_order(fk, *h, m, seed)?.matrices(&prob.unit_times)))
                .collect::<Result<Vec<_>>>()?;
            Risk::features(prob, mats)?
        }
    };
    let theta0 = if cfg.odin.theta0.is_empty() { vec![1.0; prob.param_dim()] } else { cfg.odin.theta0.clone() };
    let opts = OptimizeOptions { lbfgs: LbfgsOptions { max_iter: cfg.odin.max_iter, ..Default::default() } };
    let mut iter_ms = Vec::new();
    let mut last = Instant::now();
    let fit = optimize(&risk, &prob.y, &theta0, &opts, |_, _| {
        let now = Instant::now();
        iter_ms.push((now - last).as_secs_f64() * 1e3);
        last = now;
    })?;
    let trmse = d.trajectory_rmse(&fit.theta).unwrap_or(f64::NAN);
    let risk_rel_err = if kind != Kind::Exact && prob.len() <= EXACT_REFERENCE_MAX_N {
        let exact = Risk::exact(prob)?.value_at(&fit.x, &fit.theta, &fit.gamma)?.total;
        (fit.risk.total - exact).abs() / exact.abs()
    } else {
        0.0
    };
    Ok(Success { fit, trmse, iter_ms, risk_rel_err })
}

fn run_seed(cfg: &ExperimentConfig, runs: &[(Kind, usize)], seed: u64) -> Vec<RunResult> {
    let setup = || -> Result<(Dataset, OdinProblem<BenchmarkSystem>)> {
        let system = cfg.system()?;
        let d = generate_dataset(system, cfg.n, cfg.noise_spec(), seed)?;
        let hypers = hyperparams_for(cfg, &d)?;
        let sigma2 = d.noise_variances.clone();
        let gamma = cfg.odin.gamma.map_or_else(|| sigma2.clone(), |g| vec![g; sigma2.len()]);
        let prob =
            OdinProblem::new(system, d.times.clone(), d.y.clone(), hypers, sigma2, cfg.learn_gamma)?.with_gamma(gamma)?;
        Ok((d, prob))
    };
    let ready = setup();
    runs.iter()
        .map(|&(kind, m)| RunResult {
            seed,
            kind,
            m,
            outcome: match &ready {
                Ok((d, prob)) => run_one(cfg, d, prob, kind, m, seed).map_err(|e| e.to_string()),
                Err(e) => Err(e.to_string()),
            },
        })
        .collect()
}

/// Runs the ODIN optimizer per seed for the exact operators or each
/// configured feature order. A failing run is recorded in the `status`
/// column and the others continue.
pub fn odin_run(cfg: &ExperimentConfig, ctx: &Context) -> Result<OdinRunOutput> {
    let exact = ctx.force_exact || cfg.features.kind == Kind::Exact;
    let runs: Vec<(Kind, usize)> = if exact {
        if cfg.n > EXACT_REFERENCE_MAX_N {
            return Err(LabError::config("n", format!("exact ODIN is limited to N <= {EXACT_REFERENCE_MAX_N}")));
        }
        vec![(Kind::Exact, 0)]
    } else if cfg.odin.orders.is_empty() {
        vec![(cfg.features.kind, cfg.features.order())]
    } else {
        cfg.odin.orders.iter().map(|&m| (cfg.features.kind, m)).collect()
    };
    let q = qff::ode::RealRhs::param_dim(&cfg.system()?);
    let seeds = ctx.seeds(cfg);
    let mut results: Vec<RunResult> =
        seeds.par_iter().flat_map_iter(|&s| run_seed(cfg, &runs, s)).collect();
    results.sort_by_key(|r| (r.kind, r.m, r.seed));

    let mut cols = vec!["seed", "kind", "m", "status", "termination", "iterations", "risk", "risk_rel_err", "trmse"];
    cols.extend(["iter_ms_median", "iter_ms_std"]);
    let theta_names: Vec<String> = (0..q).map(|i| format!("theta_{i}")).collect();
    cols.extend(theta_names.iter().map(String::as_str));
    let mut table = Table::new(&cols);
    let mut trace = Table::new(&["seed", "kind", "m", "iteration", "risk"]);
    for r in &results {
        let mut row: Vec<Cell> = vec![r.seed.into(), r.kind.name().into(), r.m.into()];
        match &r.outcome {
            Ok(s) => {
                let status = if s.trmse.is_finite() { "ok" } else { "trmse_failed" };
                row.extend([status.into(), format!("{:?}", s.fit.termination).to_lowercase().into()]);
                row.extend([s.fit.iterations.into(), s.fit.risk.total.into(), s.risk_rel_err.into(), s.trmse.into()]);
                row.extend([median(&s.iter_ms).into(), std_dev(&s.iter_ms).into()]);
                row.extend(s.fit.theta.iter().map(|v| Cell::from(*v)));
                for (i, v) in s.fit.risk_trace.iter().enumerate() {
                    trace.push(vec![r.seed.into(), r.kind.name().into(), r.m.into(), i.into(), (*v).into()]);
                }
            }
            Err(msg) => {
                row.extend([format!("failed: {msg}").replace('\t', " ").into(), "none".into(), 0usize.into()]);
                row.extend(std::iter::repeat_n(Cell::from(f64::NAN), 5 + q));
            }
        }
        table.push(row);
    }

    let mut summary = Table::new(&["kind", "m", "stat", "trmse", "iter_ms", "risk_rel_err", "ok_seeds"]);
    for &(kind, m) in &runs {
        let ok: Vec<&Success> = results
            .iter()
            .filter(|r| r.kind == kind && r.m == m)
            .filter_map(|r| r.outcome.as_ref().ok())
            .filter(|s| s.trmse.is_finite())
            .collect();
        let trmse: Vec<f64> = ok.iter().map(|s| s.trmse).collect();
        let iter_ms: Vec<f64> = ok.iter().flat_map(|s| s.iter_ms.iter().copied()).collect();
        let rel: Vec<f64> = ok.iter().map(|s| s.risk_rel_err).collect();
        for (stat, q) in [("median", 0.5), ("q20", 0.2), ("q80", 0.8)] {
            summary.push(vec![
                kind.name().into(),
                m.into(),
                stat.into(),
                quantile(&trmse, q).into(),
                quantile(&iter_ms, q).into(),
                quantile(&rel, q).into(),
                ok.len().into(),
            ]);
        }
    }

    let dir = ctx.out_dir(cfg);
    let hash = cfg.hash();
    let extra = json!({ "seeds": seeds, "true_theta": cfg.system()?.true_theta() });
    write_table(&dir, "odin_runs", &table, cfg, &hash, extra.clone())?;
    write_table(&dir, "odin_summary", &summary, cfg, &hash, extra.clone())?;
    write_table(&dir, "odin_trace", &trace, cfg, &hash, extra)?;
    Ok(OdinRunOutput { runs: table, summary, trace })
}

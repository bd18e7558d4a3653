use std::time::Instant;

use qff::features::feature_map_of_order;
use qff::ode::generate_dataset;
use qff::odin::{OdinProblem, Risk};
use serde_json::json;

use super::{hyperparams_for, Context, EXACT_REFERENCE_MAX_N};
use crate::config::{BenchMode, ExperimentConfig, Kind};
use crate::error::{LabError, Result};
use crate::stats::{log_log_slope, median, std_dev};
use crate::table::{write_table, Table};

#[derive(Debug, Clone)]
pub struct BenchOutput {
    pub table: Table,
    /// Least-squares slope of log median time against log ladder value.
    pub slope: f64,
}

/// Times one risk-plus-gradient evaluation per ladder point. Each problem
/// learns gamma and consecutive evaluations alternate between two gamma
/// values, so every evaluation refactors the gamma-dependent system as an
/// optimizer iteration would. Setup (feature matrices, the exact `D` and
/// `A`) is not timed.
pub fn bench(cfg: &ExperimentConfig, ctx: &Context) -> Result<BenchOutput> {
    let b = &cfg.bench;
    if b.ladder.len() < 3 {
        return Err(LabError::config("bench.ladder", "a scaling fit needs at least 3 ladder points"));
    }
    let kind = if ctx.force_exact { Kind::Exact } else { cfg.features.kind };
    if kind == Kind::Exact && b.mode == BenchMode::Features {
        return Err(LabError::config("bench.mode", "the feature ladder needs a feature kind"));
    }
    let system = cfg.system()?;
    let seed = ctx.seeds(cfg)[0];
    let n_max = match b.mode {
        BenchMode::Observations => *b.ladder.iter().max().expect("non-empty"),
        BenchMode::Features => b.n,
    };
    if kind == Kind::Exact && n_max > EXACT_REFERENCE_MAX_N {
        return Err(LabError::config("bench.ladder", format!("exact timing is limited to N <= {EXACT_REFERENCE_MAX_N}")));
    }
    // Lengthscales live in rescaled time, so one fit serves every N.
    let hypers = hyperparams_for(cfg, &generate_dataset(system, b.n, cfg.noise_spec(), seed)?)?;

    let mut table = Table::new(&["mode", "kind", "n", "m", "repeats", "median_ms", "std_ms", "slope"]);
    let mut medians = Vec::new();
    let mut rows = Vec::new();
    for &x in &b.ladder {
        let (n, m) = match b.mode {
            BenchMode::Observations => (x, b.order),
            BenchMode::Features => (b.n, x),
        };
        let d = generate_dataset(system, n, cfg.noise_spec(), seed)?;
        let sigma2 = d.noise_variances.iter().map(|v| v.max(1e-8)).collect::<Vec<_>>();
        let prob = OdinProblem::new(system, d.times.clone(), d.y.clone(), hypers.clone(), sigma2.clone(), true)?;
        let risk = match kind.feature_kind() {
            None => Risk::exact(&prob)?,
            Some(fk) => {
                let mats = hypers
                    .iter()
                    .map(|h| Ok(feature_map_of_order(fk, *h, m, seed)?.matrices(&prob.unit_times)))
                    .collect::<Result<Vec<_>>>()?;
                Risk::features(&prob, mats)?
            }
        };
        let theta = system.true_theta();
        let gammas = [sigma2.clone(), sigma2.iter().map(|g| 1.5 * g).collect::<Vec<_>>()];
        risk.value_and_gradient(&prob.y, &theta, Some(&gammas[1]))?;
        let mut ms = Vec::with_capacity(b.repeats);
        for i in 0..b.repeats {
            let start = Instant::now();
            let out = risk.value_and_gradient(&prob.y, &theta, Some(&gammas[i % 2]))?;
            ms.push(start.elapsed().as_secs_f64() * 1e3);
            std::hint::black_box(out);
        }
        medians.push(median(&ms));
        rows.push((n, m, median(&ms), std_dev(&ms)));
    }
    let xs: Vec<f64> = b.ladder.iter().map(|&v| v as f64).collect();
    let slope = log_log_slope(&xs, &medians);
    let mode = match b.mode {
        BenchMode::Observations => "observations",
        BenchMode::Features => "features",
    };
    for (n, m, med, sd) in rows {
        let m_cell = if kind == Kind::Exact { 0 } else { m };
        table.push(vec![
            mode.into(),
            kind.name().into(),
            n.into(),
            m_cell.into(),
            b.repeats.into(),
            med.into(),
            sd.into(),
            slope.into(),
        ]);
    }
    write_table(&ctx.out_dir(cfg), "bench", &table, cfg, &cfg.hash(), json!({ "slope": slope }))?;
    Ok(BenchOutput { table, slope })
}

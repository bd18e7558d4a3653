use qff::bounds::theorem2_budget;
use qff::features::feature_map_of_order;
use qff::ode::linspace;
use qff::{FeatureMap, QffFeatureMap, RbfHyperparams};
use rayon::prelude::*;
use serde_json::json;

use super::Context;
use crate::config::{ExperimentConfig, Kind};
use crate::error::Result;
use crate::stats::quantile;
use crate::table::{write_table, Cell, Table};

/// Largest absolute errors of `phi(r)^T phi(0)`, `phi'(r)^T phi(0)` and
/// `phi'(r)^T phi'(0)` against `k`, `k'` and `k''` over the grid.
pub fn kernel_grid_errors<M: FeatureMap + ?Sized>(map: &M, grid: &[f64]) -> [f64; 3] {
    let h = *map.hyperparams();
    let (p0, q0) = (map.phi(0.0), map.phi_prime(0.0));
    let mut err = [0.0f64; 3];
    for &r in grid {
        let (pr, qr) = (map.phi(r), map.phi_prime(r));
        err[0] = err[0].max((h.eval(r) - pr.dot(&p0)).abs());
        err[1] = err[1].max((h.d1(r) - qr.dot(&p0)).abs());
        err[2] = err[2].max((h.d2(r) - qr.dot(&q0)).abs());
    }
    err
}

struct Row {
    kind: Kind,
    l: f64,
    m: usize,
    stat: &'static str,
    err: [f64; 3],
    bound: [f64; 3],
    floor: [f64; 3],
}

fn sweep_point(cfg: &ExperimentConfig, seeds: &[u64], grid: &[f64], kind: Kind, l: f64, m: usize) -> Result<Vec<Row>> {
    let h = RbfHyperparams::new(cfg.kernel_sweep.variance, l)?;
    let nan = [f64::NAN; 3];
    let row = |stat, err, bound, floor| Row { kind, l, m, stat, err, bound, floor };
    match kind {
        Kind::Qff => {
            let map = QffFeatureMap::new(h, m)?;
            let bound = theorem2_budget(m, l)
                .map(|b| {
                    let b = b.scaled(h.variance);
                    [b.e_m, b.d1_bound, b.d2_bound]
                })
                .unwrap_or(nan);
            let floor = [0, 1, 2].map(|p| map.roundoff_floor(p));
            Ok(vec![row("value", kernel_grid_errors(&map, grid), bound, floor)])
        }
        Kind::Rff | Kind::Rffb => {
            let fk = kind.feature_kind().expect("random kind");
            let samples = (0..cfg.kernel_sweep.rff_samples)
                .into_par_iter()
                .map(|i| {
                    let seed = seeds[0].wrapping_add(i as u64);
                    Ok(kernel_grid_errors(feature_map_of_order(fk, h, m, seed)?.as_ref(), grid))
                })
                .collect::<Result<Vec<_>>>()?;
            let column = |j: usize| samples.iter().map(|e| e[j]).collect::<Vec<_>>();
            let cols = [column(0), column(1), column(2)];
            Ok([("median", 0.5), ("q12.5", 0.125), ("q87.5", 0.875)]
                .into_iter()
                .map(|(stat, q)| row(stat, [0, 1, 2].map(|j| quantile(&cols[j], q)), nan, nan))
                .collect())
        }
        Kind::Exact => Ok(vec![row("value", [0.0; 3], nan, nan)]),
    }
}

/// Feature reconstruction errors of `k`, `k'`, `k''` over `r in [0, 1]` for
/// every kind, lengthscale and order; QFF rows carry the proven bounds.
pub fn kernel_sweep(cfg: &ExperimentConfig, ctx: &Context) -> Result<Table> {
    let ks = &cfg.kernel_sweep;
    let grid = linspace(0.0, 1.0, ks.grid);
    let seeds = ctx.seeds(cfg);
    let mut points = Vec::new();
    for &kind in &ks.kinds {
        for &l in &ks.lengthscales {
            for &m in &ks.orders {
                points.push((kind, l, m));
            }
        }
    }
    let mut rows: Vec<Row> = points
        .into_par_iter()
        .map(|(kind, l, m)| sweep_point(cfg, &seeds, &grid, kind, l, m))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by(|a, b| (a.kind, a.l, a.m, a.stat).partial_cmp(&(b.kind, b.l, b.m, b.stat)).expect("finite keys"));

    let mut table = Table::new(&[
        "kind", "l", "m", "stat", "err_k", "err_k1", "err_k2", "bound_k", "bound_k1", "bound_k2", "floor_k",
        "floor_k1", "floor_k2", "within_bound",
    ]);
    for r in &rows {
        let within = if r.bound[0].is_nan() {
            "na".to_string()
        } else {
            (0..3).all(|j| r.err[j] <= r.bound[j] + r.floor[j]).to_string()
        };
        let mut cells: Vec<Cell> = vec![r.kind.name().into(), r.l.into(), r.m.into(), r.stat.into()];
        cells.extend(r.err.iter().chain(&r.bound).chain(&r.floor).map(|v| Cell::from(*v)));
        cells.push(within.into());
        table.push(cells);
    }
    write_table(&ctx.out_dir(cfg), "kernel_sweep", &table, cfg, &cfg.hash(), json!({ "grid": ks.grid }))?;
    Ok(table)
}

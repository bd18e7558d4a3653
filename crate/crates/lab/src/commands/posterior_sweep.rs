use std::collections::BTreeMap;

use qff::features::feature_map_of_order;
use qff::gp::{DerivObservationSet, ExactPosterior, FeaturePosterior};
use qff::ode::{column_variances, generate_dataset, OdeModel};
use qff::odin::rescale_times;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde_json::json;

use super::{hyperparams_for, Context};
use crate::config::{ExperimentConfig, Kind};
use crate::error::{LabError, Result};
use crate::stats::quantile;
use crate::table::{write_table, Table};

/// Largest `N` for which the `2N x 2N` exact reference is built.
pub const EXACT_REFERENCE_MAX_N: usize = 2000;

type Key = (Kind, usize, u64);

/// Noisy state and derivative observations for one seed, one set per state
/// dimension, on `[0, 1]`-rescaled time. The derivative noise variance
/// keeps the state signal-to-noise ratio: `gamma_k = Var(F_k) sigma_k^2 /
/// Var(x_k)`.
fn observation_sets(cfg: &ExperimentConfig, seed: u64) -> Result<(qff::ode::Dataset, Vec<DerivObservationSet>)> {
    let system = cfg.system()?;
    let d = generate_dataset(system, cfg.n, cfg.noise_spec(), seed)?;
    let (unit, _, scale) = rescale_times(&d.times)?;
    let (n, k) = (d.len(), d.state_dim());
    let theta = system.true_theta();
    let mut f = nalgebra::DMatrix::zeros(n, k);
    let mut row = vec![0.0; k];
    let mut out = vec![0.0; k];
    for i in 0..n {
        row.iter_mut().enumerate().for_each(|(j, v)| *v = d.states[(i, j)]);
        system.rhs(&row, &theta, &mut out)?;
        for j in 0..k {
            f[(i, j)] = scale * out[j];
        }
    }
    let (var_x, var_f) = (column_variances(&d.states), column_variances(&f));
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let sets = (0..k)
        .map(|j| {
            let sigma2 = d.noise_variances[j];
            let gamma = if var_x[j] > 0.0 { var_f[j] * sigma2 / var_x[j] } else { sigma2 };
            let fy: Vec<f64> = f
                .column(j)
                .iter()
                .map(|v| {
                    let z: f64 = rng.sample(StandardNormal);
                    v + gamma.sqrt() * z
                })
                .collect();
            Ok(DerivObservationSet::new(unit.clone(), d.y.column(j).iter().copied().collect(), fy, sigma2, gamma)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((d, sets))
}

/// Per-seed errors `[e_mu, e_sigma, e_mu', e_sigma']` (largest over state
/// dimensions) for every kind, order and query point.
fn seed_errors(cfg: &ExperimentConfig, seed: u64) -> Result<BTreeMap<Key, [f64; 4]>> {
    let ps = &cfg.posterior_sweep;
    let (d, sets) = observation_sets(cfg, seed)?;
    let hypers = hyperparams_for(cfg, &d)?;
    let mut out: BTreeMap<Key, [f64; 4]> = BTreeMap::new();
    for (obs, &h) in sets.iter().zip(&hypers) {
        let exact = ExactPosterior::fit(obs, h)?;
        let reference: Vec<_> = ps.taus.iter().map(|&t| exact.query(t)).collect();
        for &kind in &ps.kinds {
            for &m in &ps.orders {
                let approx: Vec<_> = match kind.feature_kind() {
                    Some(fk) => {
                        let post = FeaturePosterior::fit(obs, feature_map_of_order(fk, h, m, seed)?)?;
                        ps.taus.iter().map(|&t| post.query(t)).collect()
                    }
                    None => ps.taus.iter().map(|&t| exact.query(t)).collect(),
                };
                for (i, (a, e)) in approx.iter().zip(&reference).enumerate() {
                    let err = [
                        (a.mu - e.mu).abs(),
                        (a.sigma - e.sigma).abs(),
                        (a.mu_prime - e.mu_prime).abs(),
                        (a.sigma_prime - e.sigma_prime).abs(),
                    ];
                    let slot = out.entry((kind, m, i as u64)).or_insert([0.0; 4]);
                    for j in 0..4 {
                        slot[j] = slot[j].max(err[j]);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Posterior errors of the feature approximations against the exact GP with
/// derivative observations; medians and 20%/80% quantiles over seeds.
pub fn posterior_sweep(cfg: &ExperimentConfig, ctx: &Context) -> Result<Table> {
    if cfg.n > EXACT_REFERENCE_MAX_N {
        return Err(LabError::config(
            "n",
            format!("posterior-sweep needs the exact reference, limited to N <= {EXACT_REFERENCE_MAX_N}"),
        ));
    }
    let seeds = ctx.seeds(cfg);
    let per_seed = seeds.par_iter().map(|&s| seed_errors(cfg, s)).collect::<Result<Vec<_>>>()?;
    let ps = &cfg.posterior_sweep;
    let mut table = Table::new(&["kind", "m", "tau", "stat", "e_mu", "e_sigma", "e_mu1", "e_sigma1", "seeds"]);
    for key in per_seed[0].keys() {
        let (kind, m, i) = *key;
        let cols: Vec<Vec<f64>> = (0..4).map(|j| per_seed.iter().map(|s| s[key][j]).collect()).collect();
        for (stat, q) in [("median", 0.5), ("q20", 0.2), ("q80", 0.8)] {
            let mut row = vec![kind.name().into(), m.into(), ps.taus[i as usize].into(), stat.into()];
            row.extend(cols.iter().map(|c| quantile(c, q).into()));
            row.push(seeds.len().into());
            table.push(row);
        }
    }
    write_table(&ctx.out_dir(cfg), "posterior_sweep", &table, cfg, &cfg.hash(), json!({ "seeds": seeds }))?;
    Ok(table)
}

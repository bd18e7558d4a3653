use std::path::PathBuf;

use qff::ode::generate_dataset;
use rayon::prelude::*;
use serde_json::json;

use super::Context;
use crate::config::ExperimentConfig;
use crate::dataset_io::{extension, write_dataset};
use crate::error::Result;
use crate::table::write_file;

#[derive(Debug, Clone)]
pub struct GenDataOutput {
    /// One file per seed, in seed order.
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
}

/// Writes one noisy dataset per seed plus `manifest.json`.
pub fn gen_data(cfg: &ExperimentConfig, ctx: &Context) -> Result<GenDataOutput> {
    let system = cfg.system()?;
    let dir = ctx.out_dir(cfg);
    let ext = extension(cfg.data.format);
    let mut results = ctx
        .seeds(cfg)
        .into_par_iter()
        .map(|seed| {
            let d = generate_dataset(system, cfg.n, cfg.noise_spec(), seed)?;
            let path = dir.join(format!("{}_n{}_seed{seed}.{ext}", system.name(), cfg.n));
            write_dataset(&path, &d, cfg.data.format)?;
            Ok((seed, path, d.noise_variances))
        })
        .collect::<Result<Vec<_>>>()?;
    results.sort_by_key(|r| r.0);
    let entries: Vec<_> = results
        .iter()
        .map(|(seed, path, vars)| {
            json!({
                "seed": seed,
                "file": path.file_name().map(|f| f.to_string_lossy().into_owned()),
                "noise_variances": vars,
            })
        })
        .collect();
    let manifest = json!({
        "config_hash": cfg.hash(),
        "config": cfg,
        "system": system.name(),
        "true_theta": system.true_theta(),
        "x0": system.x0(),
        "time_span": system.time_span(),
        "datasets": entries,
    });
    let manifest_path = dir.join("manifest.json");
    write_file(&manifest_path, &serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;
    Ok(GenDataOutput { files: results.into_iter().map(|r| r.1).collect(), manifest: manifest_path })
}

//! The experiment commands. Each reads an [`ExperimentConfig`], writes its
//! tables under the output directory and returns them.

mod bench;
mod bounds;
mod gen_data;
mod kernel_sweep;
mod odin_run;
mod posterior_sweep;

pub use bench::{bench, BenchOutput};
pub use bounds::{bounds, parse_report, BoundsQuery};
pub use gen_data::{gen_data, GenDataOutput};
pub use kernel_sweep::{kernel_grid_errors, kernel_sweep};
pub use odin_run::{odin_run, OdinRunOutput};
pub use posterior_sweep::{posterior_sweep, EXACT_REFERENCE_MAX_N};

use std::path::PathBuf;

use qff::ode::Dataset;
use qff::odin::{fit_hyperparams, rescale_times, FitMode};
use qff::RbfHyperparams;

use crate::config::{ExperimentConfig, HyperMode};
use crate::error::Result;

/// Settings that come from the command line rather than the config file.
#[derive(Debug, Clone, Default)]
pub struct Context {
    /// Overrides the config's `output`.
    pub out: Option<PathBuf>,
    /// Added to every configured seed.
    pub seed_offset: u64,
    /// Use exact operators wherever a command supports both.
    pub force_exact: bool,
}

impl Context {
    pub fn out_dir(&self, cfg: &ExperimentConfig) -> PathBuf {
        self.out.clone().unwrap_or_else(|| cfg.output.clone())
    }

    pub fn seeds(&self, cfg: &ExperimentConfig) -> Vec<u64> {
        cfg.seeds.iter().map(|s| s.wrapping_add(self.seed_offset)).collect()
    }
}

/// Per-dimension kernel hyperparameters for a dataset, in rescaled time.
pub(crate) fn hyperparams_for(cfg: &ExperimentConfig, d: &Dataset) -> Result<Vec<RbfHyperparams>> {
    if cfg.hyper.mode == HyperMode::Fixed {
        return Ok(cfg.hyper.values.iter().map(|[rho, l]| RbfHyperparams::new(*rho, *l)).collect::<qff::Result<_>>()?);
    }
    let (unit, _, _) = rescale_times(&d.times)?;
    let stride = d.len().div_ceil(cfg.hyper.fit_points);
    let t: Vec<f64> = unit.iter().step_by(stride).copied().collect();
    (0..d.state_dim())
        .map(|k| {
            let y: Vec<f64> = d.y.column(k).iter().step_by(stride).copied().collect();
            Ok(fit_hyperparams(&y, &t, FitMode::Exact)?.hyper)
        })
        .collect()
}

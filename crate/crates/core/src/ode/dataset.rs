use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)] // float math without std
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::{integrate, BenchmarkSystem, IntegrateOptions, OdeModel};
use crate::{Error, Result};

/// Observation noise: a fixed variance for every dimension, or a
/// signal-to-noise ratio `Var_t(x_k) / sigma_k^2` per dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    Variance(f64),
    Snr(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub system: BenchmarkSystem,
    pub times: Vec<f64>,
    /// `N x K` noiseless trajectory.
    pub states: DMatrix<f64>,
    /// `N x K` observations.
    pub y: DMatrix<f64>,
    pub noise: NoiseSpec,
    /// Realized per-dimension noise variances.
    pub noise_variances: Vec<f64>,
    pub seed: u64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.states.ncols()
    }

    pub fn trajectory_rmse(&self, theta_hat: &[f64]) -> Result<f64> {
        trajectory_rmse(&self.system, theta_hat, &self.system.x0(), self.system.time_span().0, &self.times, &self.states)
    }
}

/// `N` equally spaced points on `[a, b]`, endpoints included.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![a],
        _ => (0..n).map(|i| a + (b - a) * (i as f64) / ((n - 1) as f64)).collect(),
    }
}

/// Population variance over time of each column.
pub fn column_variances(x: &DMatrix<f64>) -> Vec<f64> {
    let n = x.nrows() as f64;
    x.column_iter()
        .map(|c| {
            let mean = c.sum() / n;
            c.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
        })
        .collect()
}

pub fn generate_dataset(system: BenchmarkSystem, n: usize, noise: NoiseSpec, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::domain("N", "need at least two observations"));
    }
    let level = match noise {
        NoiseSpec::Variance(v) => v,
        NoiseSpec::Snr(s) => s,
    };
    let ok = match noise {
        NoiseSpec::Variance(v) => v >= 0.0 && v.is_finite(),
        NoiseSpec::Snr(s) => s > 0.0,
    };
    if !ok {
        return Err(Error::domain("noise", alloc::format!("invalid noise level {level}")));
    }
    let (t0, t1) = system.time_span();
    let times = linspace(t0, t1, n);
    let states = integrate(&system, &system.true_theta(), &system.x0(), t0, &times, &IntegrateOptions::default())?;
    let noise_variances: Vec<f64> = match noise {
        NoiseSpec::Variance(v) => alloc::vec![v; states.ncols()],
        NoiseSpec::Snr(s) => column_variances(&states).into_iter().map(|v| v / s).collect(),
    };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut y = states.clone();
    for i in 0..n {
        for (k, var) in noise_variances.iter().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            y[(i, k)] += var.sqrt() * z;
        }
    }
    Ok(Dataset {
        system,
        times,
        states,
        y,
        noise,
        noise_variances,
        seed,
    })
}

/// `(1/N) |x_tilde - x|_2` where `x_tilde` integrates `theta_hat` from the
/// true initial state and the norm runs over all `N x K` entries.
pub fn trajectory_rmse<M: OdeModel + ?Sized>(
    model: &M,
    theta_hat: &[f64],
    x0: &[f64],
    t0: f64,
    times: &[f64],
    states_true: &DMatrix<f64>,
) -> Result<f64> {
    let xt = integrate(model, theta_hat, x0, t0, times, &IntegrateOptions::default())?;
    Ok((xt - states_true).norm() / times.len() as f64)
}

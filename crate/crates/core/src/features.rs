//! Feature maps `phi(t)` with `phi(a)^T phi(b) ~ k(a - b)` and their time
//! derivatives `phi'(t)`.
//!
//! All maps here produce interleaved cosine/sine pairs except RFF-B, which
//! uses shifted cosines. Feature matrices are `dim x N` with one column per
//! time point, so that `Phi^T Phi ~ C`, `Phi'^T Phi ~ 'C`, `Phi^T Phi' ~ C'`
//! and `Phi'^T Phi' ~ C''`.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // float math without std
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::hermite::{cached_rule, QuadratureRule};
use crate::kernel::RbfHyperparams;
use crate::{Error, Result};

/// Which approximation a feature map implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Qff,
    Rff,
    RffB,
}

pub trait FeatureMap {
    fn dim(&self) -> usize;

    fn hyperparams(&self) -> &RbfHyperparams;

    /// Writes `phi(t)` into `out` (length `dim`).
    fn phi_into(&self, t: f64, out: &mut [f64]);

    /// Writes `d phi(t) / dt` into `out` (length `dim`).
    fn phi_prime_into(&self, t: f64, out: &mut [f64]);

    fn phi(&self, t: f64) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        self.phi_into(t, v.as_mut_slice());
        v
    }

    fn phi_prime(&self, t: f64) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        self.phi_prime_into(t, v.as_mut_slice());
        v
    }

    fn matrices(&self, times: &[f64]) -> FeatureMatrices {
        let d = self.dim();
        let n = times.len();
        let mut phi = DMatrix::zeros(d, n);
        let mut phi_prime = DMatrix::zeros(d, n);
        for (j, &t) in times.iter().enumerate() {
            self.phi_into(t, &mut phi.as_mut_slice()[j * d..(j + 1) * d]);
            self.phi_prime_into(t, &mut phi_prime.as_mut_slice()[j * d..(j + 1) * d]);
        }
        FeatureMatrices { phi, phi_prime }
    }
}

impl<T: FeatureMap + ?Sized> FeatureMap for alloc::boxed::Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn hyperparams(&self) -> &RbfHyperparams {
        (**self).hyperparams()
    }

    fn phi_into(&self, t: f64, out: &mut [f64]) {
        (**self).phi_into(t, out)
    }

    fn phi_prime_into(&self, t: f64, out: &mut [f64]) {
        (**self).phi_prime_into(t, out)
    }
}

/// Stacked feature columns for a time grid.
#[derive(Debug, Clone)]
pub struct FeatureMatrices {
    pub phi: DMatrix<f64>,
    pub phi_prime: DMatrix<f64>,
}

impl FeatureMatrices {
    pub fn dim(&self) -> usize {
        self.phi.nrows()
    }

    pub fn len(&self) -> usize {
        self.phi.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.ncols() == 0
    }
}

/// Shared evaluation for maps made of `amp_i [cos(nu_i t), sin(nu_i t)]`.
fn cos_sin_pairs(amps: &[f64], freqs: &[f64], t: f64, out: &mut [f64]) {
    debug_assert_eq!(out.len(), 2 * amps.len());
    for ((o, &a), &nu) in out.chunks_exact_mut(2).zip(amps).zip(freqs) {
        let (s, c) = (nu * t).sin_cos();
        o[0] = a * c;
        o[1] = a * s;
    }
}

fn cos_sin_pairs_prime(amps: &[f64], freqs: &[f64], t: f64, out: &mut [f64]) {
    debug_assert_eq!(out.len(), 2 * amps.len());
    for ((o, &a), &nu) in out.chunks_exact_mut(2).zip(amps).zip(freqs) {
        let (s, c) = (nu * t).sin_cos();
        o[0] = -a * nu * s;
        o[1] = a * nu * c;
    }
}

/// Quadrature Fourier features of order `m` (dimension `2m`).
#[derive(Debug, Clone)]
pub struct QffFeatureMap {
    hyper: RbfHyperparams,
    rule: Arc<QuadratureRule>,
    amps: Vec<f64>,
    freqs: Vec<f64>,
}

impl QffFeatureMap {
    pub fn new(hyper: RbfHyperparams, order: usize) -> Result<Self> {
        let rule = cached_rule(order)?;
        Ok(Self::from_rule(hyper, rule))
    }

    pub fn from_rule(hyper: RbfHyperparams, rule: Arc<QuadratureRule>) -> Self {
        let ln_scale = hyper.variance.ln() - 0.5 * PI.ln();
        let amps = rule
            .ln_weights()
            .iter()
            .map(|lw| (0.5 * (ln_scale + lw)).exp())
            .collect();
        let freqs = rule
            .nodes()
            .iter()
            .map(|w| w * SQRT_2 / hyper.lengthscale)
            .collect();
        Self {
            hyper,
            rule,
            amps,
            freqs,
        }
    }

    pub fn order(&self) -> usize {
        self.rule.order()
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    /// Floating-point evaluation allowance for reconstructing `k`
    /// (`derivs = 0`), `k'` (1) or `k''` (2) from features at arguments in
    /// `[-1, 1]`: dot-product accumulation over `2m` terms plus rounding of
    /// each phase `nu t`.
    pub fn roundoff_floor(&self, derivs: i32) -> f64 {
        let m = self.amps.len() as f64;
        let s: f64 = self
            .amps
            .iter()
            .zip(&self.freqs)
            .map(|(a, nu)| a * a * nu.abs().powi(derivs) * (m + nu.abs() + 1.0))
            .sum();
        4.0 * f64::EPSILON * s
    }
}

impl FeatureMap for QffFeatureMap {
    fn dim(&self) -> usize {
        2 * self.amps.len()
    }

    fn hyperparams(&self) -> &RbfHyperparams {
        &self.hyper
    }

    fn phi_into(&self, t: f64, out: &mut [f64]) {
        cos_sin_pairs(&self.amps, &self.freqs, t, out)
    }

    fn phi_prime_into(&self, t: f64, out: &mut [f64]) {
        cos_sin_pairs_prime(&self.amps, &self.freqs, t, out)
    }
}

/// Randomized baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RandomKind {
    /// `s` frequencies, cosine/sine pairs, dimension `2s`.
    Rff,
    /// `s` (frequency, phase) draws, shifted cosines, dimension `s`.
    RffB,
}

impl From<RandomKind> for FeatureKind {
    fn from(k: RandomKind) -> Self {
        match k {
            RandomKind::Rff => FeatureKind::Rff,
            RandomKind::RffB => FeatureKind::RffB,
        }
    }
}

/// Monte Carlo feature map with frequencies drawn from the kernel's
/// spectral density. Frequencies are kept in the same dimensionless form as
/// quadrature nodes, i.e. the angular frequency is `omega * sqrt(2) / l`.
#[derive(Debug, Clone)]
pub struct RandomFeatureMap {
    kind: RandomKind,
    hyper: RbfHyperparams,
    seed: u64,
    omegas: Vec<f64>,
    biases: Vec<f64>,
    freqs: Vec<f64>,
    amps: Vec<f64>,
}

impl RandomFeatureMap {
    pub fn new(
        kind: RandomKind,
        hyper: RbfHyperparams,
        num_features: usize,
        seed: u64,
    ) -> Result<Self> {
        if num_features == 0 {
            return Err(Error::domain("num_features", "must be at least 1"));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        // k(r)/rho = E[cos(nu r)] with nu ~ N(0, 1/l^2); in the sqrt(2)/l
        // scaling this is omega ~ N(0, 1/2).
        let omegas: Vec<f64> = (0..num_features)
            .map(|_| rng.sample::<f64, _>(StandardNormal) * core::f64::consts::FRAC_1_SQRT_2)
            .collect();
        let biases = match kind {
            RandomKind::Rff => Vec::new(),
            RandomKind::RffB => (0..num_features)
                .map(|_| rng.random::<f64>() * 2.0 * PI)
                .collect(),
        };
        let freqs = omegas
            .iter()
            .map(|w| w * SQRT_2 / hyper.lengthscale)
            .collect();
        let s = num_features as f64;
        let amp = match kind {
            RandomKind::Rff => (hyper.variance / s).sqrt(),
            RandomKind::RffB => (2.0 * hyper.variance / s).sqrt(),
        };
        Ok(Self {
            kind,
            hyper,
            seed,
            omegas,
            biases,
            freqs,
            amps: alloc::vec![amp; num_features],
        })
    }

    pub fn kind(&self) -> RandomKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sampled frequencies in the dimensionless `sqrt(2)/l` scaling.
    pub fn frequencies(&self) -> &[f64] {
        &self.omegas
    }

    /// Sampled phases (empty for plain RFF).
    pub fn biases(&self) -> &[f64] {
        &self.biases
    }
}

impl FeatureMap for RandomFeatureMap {
    fn dim(&self) -> usize {
        match self.kind {
            RandomKind::Rff => 2 * self.omegas.len(),
            RandomKind::RffB => self.omegas.len(),
        }
    }

    fn hyperparams(&self) -> &RbfHyperparams {
        &self.hyper
    }

    fn phi_into(&self, t: f64, out: &mut [f64]) {
        match self.kind {
            RandomKind::Rff => cos_sin_pairs(&self.amps, &self.freqs, t, out),
            RandomKind::RffB => {
                for (((o, &a), &nu), &b) in out.iter_mut().zip(&self.amps).zip(&self.freqs).zip(&self.biases) {
                    *o = a * (nu * t + b).cos();
                }
            }
        }
    }

    fn phi_prime_into(&self, t: f64, out: &mut [f64]) {
        match self.kind {
            RandomKind::Rff => cos_sin_pairs_prime(&self.amps, &self.freqs, t, out),
            RandomKind::RffB => {
                for (((o, &a), &nu), &b) in out.iter_mut().zip(&self.amps).zip(&self.freqs).zip(&self.biases) {
                    *o = -a * nu * (nu * t + b).sin();
                }
            }
        }
    }
}

/// Builds a feature map of the requested kind whose dimension is `2 * order`.
/// For the random maps this means `order` frequencies (RFF) or `2 * order`
/// phase-shifted draws (RFF-B).
pub fn feature_map_of_order(
    kind: FeatureKind,
    hyper: RbfHyperparams,
    order: usize,
    seed: u64,
) -> Result<alloc::boxed::Box<dyn FeatureMap + Send + Sync>> {
    Ok(match kind {
        FeatureKind::Qff => alloc::boxed::Box::new(QffFeatureMap::new(hyper, order)?),
        FeatureKind::Rff => {
            alloc::boxed::Box::new(RandomFeatureMap::new(RandomKind::Rff, hyper, order, seed)?)
        }
        FeatureKind::RffB => alloc::boxed::Box::new(RandomFeatureMap::new(
            RandomKind::RffB,
            hyper,
            2 * order,
            seed,
        )?),
    })
}

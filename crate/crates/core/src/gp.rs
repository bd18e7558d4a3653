//! Posterior over a scalar function and its derivative given noisy
//! observations of both, exactly (`2N x 2N` system) or in feature space
//! (`dim x dim` system).

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::features::FeatureMap;
use crate::kernel::{gram_matrices, RbfHyperparams};
use crate::linalg::{add_diagonal, gram_rows, SpdFactor};
use crate::{Error, Result};

/// States `y` and derivatives `f` observed at `times`, with noise variances
/// `sigma2` and `gamma`.
#[derive(Debug, Clone)]
pub struct DerivObservationSet {
    pub times: Vec<f64>,
    pub y: Vec<f64>,
    pub f: Vec<f64>,
    pub sigma2: f64,
    pub gamma: f64,
}

impl DerivObservationSet {
    pub fn new(times: Vec<f64>, y: Vec<f64>, f: Vec<f64>, sigma2: f64, gamma: f64) -> Result<Self> {
        let n = times.len();
        if n == 0 {
            return Err(Error::domain("times", "need at least one observation"));
        }
        if y.len() != n {
            return Err(Error::Dimension { what: "y", expected: n, got: y.len() });
        }
        if f.len() != n {
            return Err(Error::Dimension { what: "F", expected: n, got: f.len() });
        }
        for (what, v) in [("sigma2", sigma2), ("gamma", gamma)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(what, "noise variance must be positive"));
            }
        }
        for (what, vals) in [("times", &times), ("y", &y), ("F", &f)] {
            if let Some(index) = vals.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what, index });
            }
        }
        Ok(Self { times, y, f, sigma2, gamma })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `max(|y|_inf, |F|_inf)`.
    pub fn max_abs(&self) -> f64 {
        self.y.iter().chain(&self.f).fold(0.0, |m, v| m.max(v.abs()))
    }

    fn stacked(&self) -> DVector<f64> {
        DVector::from_iterator(2 * self.len(), self.y.iter().chain(&self.f).copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorQuery {
    pub tau: f64,
    pub mu: f64,
    pub sigma: f64,
    pub mu_prime: f64,
    pub sigma_prime: f64,
}

impl PosteriorQuery {
    /// Largest absolute difference over the four quantities.
    pub fn max_abs_diff(&self, other: &PosteriorQuery) -> f64 {
        (self.mu - other.mu)
            .abs()
            .max((self.sigma - other.sigma).abs())
            .max((self.mu_prime - other.mu_prime).abs())
            .max((self.sigma_prime - other.sigma_prime).abs())
    }
}

/// Factorized exact posterior, reusable across query points.
#[derive(Debug, Clone)]
pub struct ExactPosterior {
    hyper: RbfHyperparams,
    times: Vec<f64>,
    factor: SpdFactor,
    alpha: DVector<f64>,
}

impl ExactPosterior {
    pub fn fit(obs: &DerivObservationSet, hyper: RbfHyperparams) -> Result<Self> {
        let n = obs.len();
        let km = gram_matrices(&hyper, &obs.times);
        let mut k = DMatrix::zeros(2 * n, 2 * n);
        k.view_mut((0, 0), (n, n)).copy_from(&km.c);
        k.view_mut((0, n), (n, n)).copy_from(&km.cp);
        k.view_mut((n, 0), (n, n)).copy_from(&km.pc);
        k.view_mut((n, n), (n, n)).copy_from(&km.cpp);
        for i in 0..n {
            k[(i, i)] += obs.sigma2;
            k[(n + i, n + i)] += obs.gamma;
        }
        let factor = SpdFactor::new(k, "joint state/derivative covariance", obs.sigma2.min(obs.gamma))?;
        let alpha = factor.solve(&obs.stacked());
        Ok(Self {
            hyper,
            times: obs.times.clone(),
            factor,
            alpha,
        })
    }

    pub fn query(&self, tau: f64) -> PosteriorQuery {
        let n = self.times.len();
        let h = &self.hyper;
        let mut kh = DVector::zeros(2 * n);
        let mut khp = DVector::zeros(2 * n);
        for (i, &t) in self.times.iter().enumerate() {
            let r = t - tau;
            kh[i] = h.eval(r);
            kh[n + i] = h.d1(r);
            khp[i] = -h.d1(r);
            khp[n + i] = h.d2(r);
        }
        let rho = h.variance;
        let l2 = h.lengthscale * h.lengthscale;
        PosteriorQuery {
            tau,
            mu: kh.dot(&self.alpha),
            sigma: rho - self.factor.quad_form(&kh),
            mu_prime: khp.dot(&self.alpha),
            sigma_prime: rho / l2 - self.factor.quad_form(&khp),
        }
    }
}

/// Posterior in the weight space of a feature map: `x(t) = phi(t)^T w` with
/// `w ~ N(0, I)`.
#[derive(Debug, Clone)]
pub struct FeaturePosterior<M> {
    map: M,
    factor: SpdFactor,
    mean: DVector<f64>,
}

impl<M: FeatureMap> FeaturePosterior<M> {
    pub fn fit(obs: &DerivObservationSet, map: M) -> Result<Self> {
        let fm = map.matrices(&obs.times);
        let mut p = gram_rows(&fm.phi) / obs.sigma2 + gram_rows(&fm.phi_prime) / obs.gamma;
        add_diagonal(&mut p, 1.0);
        let factor = SpdFactor::new(p, "feature-space posterior precision", 0.0)?;
        let y = DVector::from_column_slice(&obs.y);
        let f = DVector::from_column_slice(&obs.f);
        let rhs = &fm.phi * y / obs.sigma2 + &fm.phi_prime * f / obs.gamma;
        let mean = factor.solve(&rhs);
        Ok(Self { map, factor, mean })
    }

    pub fn map(&self) -> &M {
        &self.map
    }

    pub fn query(&self, tau: f64) -> PosteriorQuery {
        let phi = self.map.phi(tau);
        let phi_p = self.map.phi_prime(tau);
        PosteriorQuery {
            tau,
            mu: phi.dot(&self.mean),
            sigma: self.factor.quad_form(&phi),
            mu_prime: phi_p.dot(&self.mean),
            sigma_prime: self.factor.quad_form(&phi_p),
        }
    }
}

pub fn exact_posterior(obs: &DerivObservationSet, hyper: RbfHyperparams, tau: f64) -> Result<PosteriorQuery> {
    Ok(ExactPosterior::fit(obs, hyper)?.query(tau))
}

pub fn approx_posterior<M: FeatureMap>(obs: &DerivObservationSet, map: M, tau: f64) -> Result<PosteriorQuery> {
    Ok(FeaturePosterior::fit(obs, map)?.query(tau))
}

//! ODIN: joint estimation of states `x` and ODE parameters `theta` by
//! minimizing a risk that combines a GP prior on each state dimension, the
//! observation likelihood, and a gradient-matching term between the GP
//! derivative and `f(x, theta)`.
//!
//! Times are affinely mapped to `[0, 1]` before anything else; lengthscales
//! are in those rescaled units and `f` is multiplied by the time span.

mod fit;
mod operators;
mod risk;
mod solve;

pub use fit::{fit_hyperparams, marginal_nll_exact, marginal_nll_features, FitMode, FitResult};
pub use operators::{DimOperator, GammaFactor};
pub use risk::{Risk, RiskGradient, RiskValue};
pub use solve::{optimize, OdinFit, OptimizeOptions};

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::kernel::RbfHyperparams;
use crate::ode::OdeModel;
use crate::{Error, Result};

/// Maps times onto `[0, 1]`; returns the rescaled times, the offset and the
/// scale (`t = offset + scale * s`).
pub fn rescale_times(times: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
    let (&first, &last) = match (times.first(), times.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::domain("times", "empty time grid")),
    };
    let scale = last - first;
    if !(scale > 0.0) || times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::domain("times", "must be strictly increasing"));
    }
    Ok((times.iter().map(|t| (t - first) / scale).collect(), first, scale))
}

/// Everything the risk needs besides the iterate.
#[derive(Debug, Clone)]
pub struct OdinProblem<M> {
    pub model: M,
    /// Original observation times.
    pub times: Vec<f64>,
    /// Times mapped to `[0, 1]`.
    pub unit_times: Vec<f64>,
    pub time_scale: f64,
    /// `N x K` observations.
    pub y: DMatrix<f64>,
    /// Per-dimension kernel hyperparameters in rescaled time units.
    pub hypers: Vec<RbfHyperparams>,
    pub sigma2: Vec<f64>,
    /// Initial (or fixed) gradient-matching variance per dimension.
    pub gamma: Vec<f64>,
    pub jitter: Vec<f64>,
    pub learn_gamma: bool,
}

impl<M: OdeModel> OdinProblem<M> {
    /// Builds a problem with the default jitter `1e-6 * rho_k` and
    /// `gamma_k = sigma_k^2`.
    pub fn new(
        model: M,
        times: Vec<f64>,
        y: DMatrix<f64>,
        hypers: Vec<RbfHyperparams>,
        sigma2: Vec<f64>,
        learn_gamma: bool,
    ) -> Result<Self> {
        let k = model.state_dim();
        let n = times.len();
        if y.ncols() != k {
            return Err(Error::Dimension { what: "observation columns", expected: k, got: y.ncols() });
        }
        if y.nrows() != n {
            return Err(Error::Dimension { what: "observation rows", expected: n, got: y.nrows() });
        }
        for (what, len) in [("hyperparameters", hypers.len()), ("sigma2", sigma2.len())] {
            if len != k {
                return Err(Error::Dimension { what, expected: k, got: len });
            }
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "observations", index: i });
        }
        if sigma2.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::domain("sigma2", "noise variances must be positive"));
        }
        let (unit_times, _, time_scale) = rescale_times(&times)?;
        let jitter = hypers.iter().map(|h| h.default_jitter()).collect();
        let gamma = sigma2.clone();
        Ok(Self {
            model,
            times,
            unit_times,
            time_scale,
            y,
            hypers,
            sigma2,
            gamma,
            jitter,
            learn_gamma,
        })
    }

    pub fn with_gamma(mut self, gamma: Vec<f64>) -> Result<Self> {
        if gamma.len() != self.state_dim() {
            return Err(Error::Dimension { what: "gamma", expected: self.state_dim(), got: gamma.len() });
        }
        if gamma.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(Error::domain("gamma", "must be positive"));
        }
        self.gamma = gamma;
        Ok(self)
    }

    pub fn with_jitter(mut self, jitter: Vec<f64>) -> Result<Self> {
        if jitter.len() != self.state_dim() {
            return Err(Error::Dimension { what: "jitter", expected: self.state_dim(), got: jitter.len() });
        }
        if jitter.iter().any(|g| !(*g > 0.0)) {
            return Err(Error::domain("jitter", "must be positive"));
        }
        self.jitter = jitter;
        Ok(self)
    }

    pub fn state_dim(&self) -> usize {
        self.model.state_dim()
    }

    pub fn param_dim(&self) -> usize {
        self.model.param_dim()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

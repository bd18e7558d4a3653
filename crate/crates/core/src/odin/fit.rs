//! Per-dimension kernel hyperparameters by maximizing the GP marginal
//! likelihood of the state observations.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // float math without std
use num_traits::Float;

use crate::features::{FeatureMap, QffFeatureMap};
use crate::kernel::RbfHyperparams;
use crate::linalg::{add_diagonal, gram_rows, SpdFactor};
use crate::optim::nelder_mead;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    Exact,
    /// Quadrature features of the given order.
    Features { order: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub hyper: RbfHyperparams,
    pub sigma2: f64,
    /// Negative log marginal likelihood at the optimum.
    pub nll: f64,
    pub evaluations: usize,
}

/// `-ln N(y | 0, C + sigma2 I)`.
pub fn marginal_nll_exact(y: &[f64], times: &[f64], hyper: &RbfHyperparams, sigma2: f64) -> Result<f64> {
    let n = times.len();
    let mut k = DMatrix::from_fn(n, n, |i, j| hyper.eval(times[i] - times[j]));
    add_diagonal(&mut k, sigma2);
    let f = SpdFactor::new(k, "C + sigma2 I", sigma2)?;
    let yv = DVector::from_column_slice(y);
    Ok(0.5 * (f.quad_form(&yv) + f.ln_det() + n as f64 * (2.0 * PI).ln()))
}

/// Feature approximation of [`marginal_nll_exact`] with `C ~ Phi^T Phi`.
pub fn marginal_nll_features<F: FeatureMap>(y: &[f64], times: &[f64], map: &F, sigma2: f64) -> Result<f64> {
    let n = times.len();
    let phi = map.matrices(times).phi;
    let m = phi.nrows();
    let mut g = gram_rows(&phi);
    add_diagonal(&mut g, sigma2);
    let f = SpdFactor::new(g, "Phi Phi^T + sigma2 I", sigma2)?;
    let yv = DVector::from_column_slice(y);
    let w = f.solve(&(&phi * &yv));
    let quad = (&yv - phi.tr_mul(&w)).norm_squared() / sigma2 + w.norm_squared();
    let ln_det = (n as f64 - m as f64) * sigma2.ln() + f.ln_det();
    Ok(0.5 * (quad + ln_det + n as f64 * (2.0 * PI).ln()))
}

const START_LENGTHSCALES: [f64; 4] = [0.05, 0.1, 0.2, 0.4];
const MAX_EVALS_PER_START: usize = 400;

/// Fits `(rho, l, sigma2)` for one dimension on `[0, 1]`-rescaled times,
/// searching in log space inside a box scaled by the data's second moment.
pub fn fit_hyperparams(y: &[f64], unit_times: &[f64], mode: FitMode) -> Result<FitResult> {
    let n = unit_times.len();
    if n < 3 {
        return Err(Error::domain("N", "hyperparameter fitting needs at least 3 points"));
    }
    if y.len() != n {
        return Err(Error::Dimension { what: "y", expected: n, got: y.len() });
    }
    let second_moment = y.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let v = if second_moment > 0.0 { second_moment } else { 1.0 };
    let lower = [(1e-2 * v).ln(), 0.01f64.ln(), (1e-8 * v).ln()];
    let upper = [(1e2 * v).ln(), 2.0f64.ln(), v.ln()];
    let objective = |p: &[f64]| -> f64 {
        let hyper = match RbfHyperparams::new(p[0].exp(), p[1].exp()) {
            Ok(h) => h,
            Err(_) => return f64::INFINITY,
        };
        let s2 = p[2].exp();
        let r = match mode {
            FitMode::Exact => marginal_nll_exact(y, unit_times, &hyper, s2),
            FitMode::Features { order } => {
                QffFeatureMap::new(hyper, order).and_then(|m| marginal_nll_features(y, unit_times, &m, s2))
            }
        };
        r.unwrap_or(f64::INFINITY)
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut trace = Vec::new();
    let mut evaluations = 0;
    for &l0 in &START_LENGTHSCALES {
        let x0 = vec![v.ln(), l0.ln(), (1e-2 * v).ln()];
        let r = nelder_mead(&objective, &x0, 0.5, &lower, &upper, MAX_EVALS_PER_START, 1e-10);
        evaluations += r.evaluations;
        trace.push(r.value);
        if r.value.is_finite() && best.as_ref().is_none_or(|b| r.value < b.1) {
            best = Some((r.x, r.value));
        }
    }
    let (p, nll) = best.ok_or(Error::FitFailed { trace })?;
    Ok(FitResult {
        hyper: RbfHyperparams::new(p[0].exp(), p[1].exp())?,
        sigma2: p[2].exp(),
        nll,
        evaluations,
    })
}

//! Closed-form error bounds for the quadrature features and the minimum
//! orders that guarantee a requested accuracy for the posterior and the
//! risk. Everything is evaluated in log space; results underflow to 0 or
//! overflow to infinity instead of producing NaN.
//!
//! The feature bounds are stated for `rho = sqrt(pi)`; use
//! [`ErrorBudget::scaled`] for other variances.

use core::f64::consts::{E, LN_2, PI};

#[allow(unused_imports)] // float math without std
use num_traits::Float;

use crate::{Error, Result};

/// `ln E_m` with `E_m = sqrt(pi) * (e / (4 l^2 m))^m`.
pub fn ln_e_m(m: usize, l: f64) -> f64 {
    let mf = m as f64;
    0.5 * PI.ln() + mf * (1.0 - (4.0 * l * l).ln() - mf.ln())
}

pub fn e_m(m: usize, l: f64) -> f64 {
    ln_e_m(m, l).exp()
}

/// Bounds on `|k - phi^T phi|`, `|k' - phi'^T phi|` and `|k'' - phi'^T phi'|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBudget {
    pub e_m: f64,
    pub d1_bound: f64,
    pub d2_bound: f64,
}

impl ErrorBudget {
    /// Rescales the bounds from `rho = sqrt(pi)` to variance `rho`.
    pub fn scaled(&self, rho: f64) -> Self {
        let s = rho / PI.sqrt();
        Self {
            e_m: s * self.e_m,
            d1_bound: s * self.d1_bound,
            d2_bound: s * self.d2_bound,
        }
    }
}

fn check_l(l: f64) -> Result<()> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::domain("lengthscale", "must be positive and finite"));
    }
    Ok(())
}

/// `E_m`, `(2e/l^2) E_{m-2}`, `(2e/l^4) E_{m-3}`.
pub fn theorem2_budget(m: usize, l: f64) -> Result<ErrorBudget> {
    check_l(l)?;
    if m < 4 {
        return Err(Error::domain("order", "derivative bounds need m >= 4"));
    }
    let l2 = l * l;
    Ok(ErrorBudget {
        e_m: e_m(m, l),
        d1_bound: ((2.0 * E / l2).ln() + ln_e_m(m - 2, l)).exp(),
        d2_bound: ((2.0 * E / (l2 * l2)).ln() + ln_e_m(m - 3, l)).exp(),
    })
}

/// Intermediate, tighter forms `8 (m-1) E_{m-1}` and `(4/l^2)(m-1) E_{m-2}`
/// of the derivative bounds (the kernel bound itself is unchanged).
pub fn tight_budget(m: usize, l: f64) -> Result<ErrorBudget> {
    check_l(l)?;
    if m < 3 {
        return Err(Error::domain("order", "tight derivative bounds need m >= 3"));
    }
    let mm1 = (m - 1) as f64;
    Ok(ErrorBudget {
        e_m: e_m(m, l),
        d1_bound: ((8.0 * mm1).ln() + ln_e_m(m - 1, l)).exp(),
        d2_bound: ((4.0 * mm1 / (l * l)).ln() + ln_e_m(m - 2, l)).exp(),
    })
}

fn positive(what: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(what, "must be positive and finite"))
    }
}

fn ceil_order(x: f64) -> usize {
    x.ceil() as usize
}

/// Smallest quadrature order for which every posterior error (mean,
/// variance, derivative mean, derivative variance) is at most `tol` on
/// `[0, 1]`. `c = min(gamma, sigma^2)`, `r_max = max(|y|_inf, |F|_inf)`.
pub fn min_order_gprd(l: f64, rho: f64, n: usize, c: f64, r_max: f64, tol: f64) -> Result<usize> {
    let l = positive("lengthscale", l)?;
    let rho = positive("variance", rho)?;
    let c = positive("noise floor", c)?;
    let r_max = positive("observation magnitude", r_max)?;
    let tol = positive("tolerance", tol)?;
    if n == 0 {
        return Err(Error::domain("n", "must be at least 1"));
    }
    if tol >= 1.0 {
        return Err(Error::domain("tolerance", "must lie in (0, 1)"));
    }
    let (l, rho, c, r_max) = (l.min(1.0), rho.max(1.0), c.min(1.0), r_max.max(1.0));
    let nf = n as f64;
    let ln_arg = 270f64.ln() + 2.0 * nf.ln() + 3.0 * rho.ln() + r_max.ln()
        - 8.0 * l.ln()
        - 2.0 * c.ln()
        - tol.ln();
    let branch = (E / (2.0 * l * l)).max(ln_arg / LN_2);
    Ok(ceil_order(3.0 + branch))
}

/// Smallest quadrature order for which the feature risk has relative error
/// at most `eps` against the exact risk, for any states and parameters.
pub fn min_order_risk(l: f64, rho: f64, jitter: f64, gamma: f64, n: usize, eps: f64) -> Result<usize> {
    let l = positive("lengthscale", l)?;
    let rho = positive("variance", rho)?;
    let jitter = positive("jitter", jitter)?;
    let gamma = positive("gamma", gamma)?;
    if n < 60 {
        return Err(Error::domain("n", "the risk bound requires n >= 60"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain("eps", "the risk bound requires 0 < eps < 1"));
    }
    let (l, rho, jitter, gamma) = (l.min(1.0), rho.max(1.0), jitter.min(1.0), gamma.min(1.0));
    let nf = n as f64;
    let ln_arg = 2.0 * rho.ln() + 3.0 * nf.ln() - 2.0 * jitter.ln() - gamma.ln() - 4.0 * l.ln() - eps.ln();
    let branch = (E / (2.0 * l * l)).max(ln_arg / LN_2);
    Ok(ceil_order(10.0 + branch))
}

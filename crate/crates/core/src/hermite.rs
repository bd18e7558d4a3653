//! Gauss–Hermite rules for the weight `exp(-w^2)` on the real line.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float math without std
use num_traits::Float;
use spin::RwLock;

use crate::{Error, Result};

/// Largest order guaranteed to be constructible.
pub const MAX_ORDER: usize = 512;

const NEWTON_TOL: f64 = 1e-14;
const NEWTON_MAX_ITER: usize = 100;

/// Order-`m` Gauss–Hermite nodes (increasing) and weights.
///
/// Weights are also kept as logarithms: for orders beyond roughly 380 the
/// outermost weights are smaller than the smallest positive `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    ln_weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn ln_weights(&self) -> &[f64] {
        &self.ln_weights
    }

    /// `sum_i W_i f(w_i)`.
    pub fn apply<F: FnMut(f64) -> f64>(&self, mut f: F) -> Result<f64> {
        let mut acc = 0.0;
        for (i, (&x, &w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "integrand at quadrature node",
                    index: i,
                });
            }
            acc += w * v;
        }
        Ok(acc)
    }
}

/// Free-function form of [`QuadratureRule::apply`].
pub fn quadrature_apply<F: FnMut(f64) -> f64>(rule: &QuadratureRule, f: F) -> Result<f64> {
    rule.apply(f)
}

/// Orthonormal Hermite recurrence at `z`; returns `(p_m(z), p_m'(z))`.
fn hermite_orthonormal(m: usize, z: f64) -> (f64, f64) {
    let pim4 = core::f64::consts::PI.powf(-0.25);
    let mut p1 = pim4;
    let mut p2 = 0.0;
    for j in 0..m {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, (2.0 * m as f64).sqrt() * p2)
}

/// Number of roots of the order-`m` Hermite polynomial greater than `x`,
/// from the sign changes of the recurrence (a Sturm sequence).
fn roots_above(m: usize, x: f64) -> usize {
    let mut p1 = 1.0f64;
    let mut p2 = 0.0f64;
    let mut last_sign = true;
    let mut changes = 0;
    for j in 0..m {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = x * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
        if p1 != 0.0 {
            let sign = p1 > 0.0;
            if sign != last_sign {
                changes += 1;
            }
            last_sign = sign;
        }
    }
    changes
}

/// Newton iteration from `z`; `None` if it fails to settle.
fn newton(m: usize, mut z: f64) -> Option<f64> {
    for _ in 0..NEWTON_MAX_ITER {
        let (p, dp) = hermite_orthonormal(m, z);
        let step = p / dp;
        z -= step;
        if !z.is_finite() {
            return None;
        }
        if step.abs() <= NEWTON_TOL * z.abs().max(1.0) {
            return Some(z);
        }
    }
    None
}

/// True if `z` is the `i`-th largest root (0-based).
fn is_root_number(m: usize, i: usize, z: f64) -> bool {
    let d = 1e-9 * z.abs().max(1.0);
    roots_above(m, z + d) == i && roots_above(m, z - d) == i + 1
}

/// Isolates the `i`-th largest root by bisection on the root count, for
/// when Newton from the asymptotic guess lands on a neighbour.
fn bracketed_root(m: usize, i: usize, hi: f64) -> Option<f64> {
    let (mut lo, mut hi) = (0.0f64, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if roots_above(m, mid) > i {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-6 * hi.max(1.0) {
            break;
        }
    }
    newton(m, 0.5 * (lo + hi)).filter(|&z| is_root_number(m, i, z))
}

/// Builds the order-`m` rule by Newton iteration on the Hermite recurrence.
pub fn gauss_hermite_rule(m: usize) -> Result<QuadratureRule> {
    if m == 0 {
        return Err(Error::RuleConstruction {
            order: m,
            reason: "order must be at least 1",
        });
    }
    let mf = m as f64;
    // Strictly positive roots, largest first.
    let npos = m / 2;
    let upper = (2.0 * mf + 1.0).sqrt() + 2.0;
    let mut pos = vec![0.0f64; m.div_ceil(2)];
    let mut z = 0.0f64;
    for i in 0..npos {
        z = match i {
            0 => (2.0 * mf + 1.0).sqrt() - 1.85575 * (2.0 * mf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * mf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * pos[0],
            3 => 1.91 * z - 0.91 * pos[1],
            _ => 2.0 * z - pos[i - 2],
        };
        z = match newton(m, z).filter(|&r| is_root_number(m, i, r)) {
            Some(r) => r,
            None => {
                let hi = if i == 0 { upper } else { pos[i - 1] };
                bracketed_root(m, i, hi).ok_or(Error::RuleConstruction {
                    order: m,
                    reason: "Newton iteration did not converge",
                })?
            }
        };
        pos[i] = z;
    }
    // For odd m the middle root is exactly zero.
    let ln_w: Vec<f64> = pos
        .iter()
        .map(|&x| {
            let pp = hermite_orthonormal(m, x).1.abs();
            core::f64::consts::LN_2 - 2.0 * pp.ln()
        })
        .collect();
    let half = pos.len();

    let mut nodes = vec![0.0; m];
    let mut ln_weights = vec![0.0; m];
    for i in 0..half {
        nodes[i] = -pos[i];
        nodes[m - 1 - i] = pos[i];
        ln_weights[i] = ln_w[i];
        ln_weights[m - 1 - i] = ln_w[i];
    }
    if nodes.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::RuleConstruction {
            order: m,
            reason: "nodes are not strictly increasing",
        });
    }
    let weights = ln_weights.iter().map(|l| l.exp()).collect();
    Ok(QuadratureRule {
        order: m,
        nodes,
        weights,
        ln_weights,
    })
}

static CACHE: RwLock<BTreeMap<usize, Arc<QuadratureRule>>> = RwLock::new(BTreeMap::new());

/// Shared, memoized rule of order `m`.
pub fn cached_rule(m: usize) -> Result<Arc<QuadratureRule>> {
    if let Some(rule) = CACHE.read().get(&m) {
        return Ok(rule.clone());
    }
    let rule = Arc::new(gauss_hermite_rule(m)?);
    let mut guard = CACHE.write();
    Ok(guard.entry(m).or_insert(rule).clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT_PI: f64 = 1.772_453_850_905_516;

    #[test]
    fn low_orders_match_closed_forms() {
        let r1 = gauss_hermite_rule(1).unwrap();
        assert_eq!(r1.nodes(), &[0.0]);
        assert!((r1.weights()[0] - SQRT_PI).abs() < 1e-14);

        let r2 = gauss_hermite_rule(2).unwrap();
        let a = core::f64::consts::FRAC_1_SQRT_2;
        assert!((r2.nodes()[0] + a).abs() < 1e-15 && (r2.nodes()[1] - a).abs() < 1e-15);
        for w in r2.weights() {
            assert!((w - SQRT_PI / 2.0).abs() < 1e-14);
        }

        let r3 = gauss_hermite_rule(3).unwrap();
        let b = 1.5f64.sqrt();
        assert!((r3.nodes()[0] + b).abs() < 1e-14 && r3.nodes()[1] == 0.0);
        assert!((r3.weights()[0] - SQRT_PI / 6.0).abs() < 1e-14);
        assert!((r3.weights()[1] - 2.0 * SQRT_PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn zero_order_rejected() {
        assert!(matches!(
            gauss_hermite_rule(0),
            Err(Error::RuleConstruction { order: 0, .. })
        ));
    }

    #[test]
    fn top_order_builds() {
        let r = gauss_hermite_rule(MAX_ORDER).unwrap();
        let s: f64 = r.weights().iter().sum();
        assert!((s - SQRT_PI).abs() < 1e-12 * SQRT_PI);
        assert!(r.ln_weights().iter().all(|l| l.is_finite()));
    }

    #[test]
    fn apply_reports_bad_node() {
        let r = gauss_hermite_rule(3).unwrap();
        let e = r.apply(|x| 1.0 / x).unwrap_err();
        assert_eq!(e, Error::NonFinite { what: "integrand at quadrature node", index: 1 });
    }

    #[test]
    fn cache_returns_shared_rule() {
        let a = cached_rule(17).unwrap();
        let b = cached_rule(17).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }
}

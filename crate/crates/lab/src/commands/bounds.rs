use qff::bounds::{min_order_gprd, min_order_risk, theorem2_budget};

use crate::error::Result;

/// A closed-form bound query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundsQuery {
    /// Kernel approximation bounds at order `m`, variance `rho`.
    Budget { m: usize, l: f64, rho: f64 },
    /// Smallest order meeting a posterior tolerance.
    Gprd { l: f64, rho: f64, n: usize, c: f64, r_max: f64, tol: f64 },
    /// Smallest order meeting a relative risk tolerance.
    Risk { l: f64, rho: f64, jitter: f64, gamma: f64, n: usize, eps: f64 },
}

/// Evaluates the query and renders `key = value` lines; floats use the
/// shortest form that parses back to the same value.
pub fn bounds(q: &BoundsQuery) -> Result<String> {
    Ok(match *q {
        BoundsQuery::Budget { m, l, rho } => {
            let b = theorem2_budget(m, l)?.scaled(rho);
            format!("m = {m}\nl = {l:e}\nrho = {rho:e}\ne_m = {:e}\nd1_bound = {:e}\nd2_bound = {:e}\n", b.e_m, b.d1_bound, b.d2_bound)
        }
        BoundsQuery::Gprd { l, rho, n, c, r_max, tol } => {
            let m = min_order_gprd(l, rho, n, c, r_max, tol)?;
            format!("min_order = {m}\nfeature_count = {}\n", 2 * m)
        }
        BoundsQuery::Risk { l, rho, jitter, gamma, n, eps } => {
            let m = min_order_risk(l, rho, jitter, gamma, n, eps)?;
            format!("min_order = {m}\nfeature_count = {}\n", 2 * m)
        }
    })
}

/// Reads [`bounds`] output back into `(key, value)` pairs.
pub fn parse_report(s: &str) -> Option<Vec<(String, f64)>> {
    s.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (k, v) = l.split_once(" = ")?;
            Some((k.to_string(), v.trim().parse().ok()?))
        })
        .collect()
}

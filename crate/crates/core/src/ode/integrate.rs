//! Dormand–Prince 5(4) with the standard 4th-order dense output.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)] // float math without std
use num_traits::Float;

use super::OdeModel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            atol: 1e-9,
            rtol: 1e-8,
            max_steps: 2_000_000,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Rhs<'a, M: ?Sized> {
    model: &'a M,
    theta: &'a [f64],
}

impl<M: OdeModel + ?Sized> Rhs<'_, M> {
    fn call(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.model.rhs(x, self.theta, out).map_err(|e| match e {
            Error::Inadmissible { reason } => Error::Integration { t, reason },
            other => other,
        })?;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration {
                t,
                reason: "non-finite derivative",
            });
        }
        Ok(())
    }
}

fn lincomb(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &[f64])]) {
    for i in 0..out.len() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] = y[i] + h * acc;
    }
}

/// Integrates from `(t0, x0)` and returns the `N x K` trajectory sampled at
/// `times`, which must be non-decreasing and not before `t0`.
pub fn integrate<M: OdeModel + ?Sized>(
    model: &M,
    theta: &[f64],
    x0: &[f64],
    t0: f64,
    times: &[f64],
    opts: &IntegrateOptions,
) -> Result<DMatrix<f64>> {
    let k = model.state_dim();
    if x0.len() != k {
        return Err(Error::Dimension { what: "initial state", expected: k, got: x0.len() });
    }
    if let Some(i) = theta.iter().chain(x0).position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "theta / initial state", index: i });
    }
    if times.windows(2).any(|w| !(w[0] <= w[1])) || times.first().is_some_and(|&t| t < t0) {
        return Err(Error::domain("times", "must be non-decreasing and start at or after t0"));
    }
    let n = times.len();
    let mut out = DMatrix::zeros(n, k);
    let mut next = 0;
    while next < n && times[next] == t0 {
        for j in 0..k {
            out[(next, j)] = x0[j];
        }
        next += 1;
    }
    if next == n {
        return Ok(out);
    }
    let t_end = times[n - 1];
    let f = Rhs { model, theta };

    let mut y = x0.to_vec();
    let mut k1 = vec![0.0; k];
    let mut k2 = vec![0.0; k];
    let mut k3 = vec![0.0; k];
    let mut k4 = vec![0.0; k];
    let mut k5 = vec![0.0; k];
    let mut k6 = vec![0.0; k];
    let mut k7 = vec![0.0; k];
    let mut ytmp = vec![0.0; k];
    let mut ynew = vec![0.0; k];
    let mut rc: [Vec<f64>; 5] = core::array::from_fn(|_| vec![0.0; k]);
    f.call(t0, &y, &mut k1)?;

    let scale = |a: &[f64], b: &[f64], i: usize| opts.atol + opts.rtol * a[i].abs().max(b[i].abs());
    // Initial step size (Hairer–Wanner heuristic).
    let mut h = {
        let d0 = (y.iter().enumerate().map(|(i, v)| (v / scale(&y, &y, i)).powi(2)).sum::<f64>() / k as f64).sqrt();
        let d1 = (k1.iter().enumerate().map(|(i, v)| (v / scale(&y, &y, i)).powi(2)).sum::<f64>() / k as f64).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(t_end - t0);
        lincomb(&mut ytmp, &y, h0, &[(1.0, &k1)]);
        f.call(t0 + h0, &ytmp, &mut k2)?;
        let d2 = (k2
            .iter()
            .zip(&k1)
            .enumerate()
            .map(|(i, (a, b))| ((a - b) / scale(&y, &y, i)).powi(2))
            .sum::<f64>()
            / k as f64)
            .sqrt()
            / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(t_end - t0)
    };
    let mut t = t0;
    let mut steps = 0;
    while next < n {
        if steps >= opts.max_steps {
            return Err(Error::Integration { t, reason: "step budget exhausted" });
        }
        steps += 1;
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Integration { t, reason: "step size underflow" });
        }
        let h_step = h.min(t_end - t);
        let hs = h_step;
        lincomb(&mut ytmp, &y, hs, &[(A21, &k1)]);
        f.call(t + C2 * hs, &ytmp, &mut k2)?;
        lincomb(&mut ytmp, &y, hs, &[(A31, &k1), (A32, &k2)]);
        f.call(t + C3 * hs, &ytmp, &mut k3)?;
        lincomb(&mut ytmp, &y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        f.call(t + C4 * hs, &ytmp, &mut k4)?;
        lincomb(&mut ytmp, &y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        f.call(t + C5 * hs, &ytmp, &mut k5)?;
        lincomb(&mut ytmp, &y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        f.call(t + hs, &ytmp, &mut k6)?;
        lincomb(&mut ynew, &y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        f.call(t + hs, &ynew, &mut k7)?;
        let mut err = 0.0;
        for i in 0..k {
            let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            err += (e / scale(&y, &ynew, i)).powi(2);
        }
        let err = (err / k as f64).sqrt();
        if !err.is_finite() {
            h *= 0.2;
            continue;
        }
        let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 10.0);
        if err > 1.0 {
            h = hs * fac.min(1.0);
            continue;
        }
        let t_new = if hs == t_end - t { t_end } else { t + hs };
        for i in 0..k {
            let ydiff = ynew[i] - y[i];
            let bspl = hs * k1[i] - ydiff;
            rc[0][i] = y[i];
            rc[1][i] = ydiff;
            rc[2][i] = bspl;
            rc[3][i] = ydiff - hs * k7[i] - bspl;
            rc[4][i] = hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        while next < n && times[next] <= t_new {
            let s = (times[next] - t) / hs;
            let s1 = 1.0 - s;
            for i in 0..k {
                out[(next, i)] = if times[next] == t_new {
                    ynew[i]
                } else {
                    rc[0][i] + s * (rc[1][i] + s1 * (rc[2][i] + s * (rc[3][i] + s1 * rc[4][i])))
                };
            }
            next += 1;
        }
        t = t_new;
        core::mem::swap(&mut y, &mut ynew);
        core::mem::swap(&mut k1, &mut k7);
        h = hs * fac;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::{BenchmarkSystem, RealRhs};
    use crate::real::Real;

    struct Decay;

    impl RealRhs for Decay {
        fn state_dim(&self) -> usize {
            1
        }
        fn param_dim(&self) -> usize {
            1
        }
        fn eval<T: Real>(&self, x: &[T], th: &[T], out: &mut [T]) -> Result<()> {
            out[0] = -th[0] * x[0];
            Ok(())
        }
    }

    #[test]
    fn exponential_decay() {
        let times: Vec<f64> = (0..21).map(|i| i as f64 * 0.25).collect();
        let x = integrate(&Decay, &[1.3], &[2.0], 0.0, &times, &IntegrateOptions::default()).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let exact = 2.0 * (-1.3 * t).exp();
            assert!((x[(i, 0)] - exact).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn lotka_volterra_first_integral() {
        let sys = BenchmarkSystem::LotkaVolterra;
        let th = sys.true_theta();
        let times: Vec<f64> = (0..201).map(|i| i as f64 * 0.01).collect();
        let x = integrate(&sys, &th, &sys.x0(), 0.0, &times, &IntegrateOptions::default()).unwrap();
        let v = |a: f64, b: f64| th[3] * a - th[2] * a.ln() + th[1] * b - th[0] * b.ln();
        let v0 = v(5.0, 3.0);
        for i in 0..times.len() {
            assert!(((v(x[(i, 0)], x[(i, 1)]) - v0) / v0).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_field_is_constant() {
        let sys = BenchmarkSystem::LotkaVolterra;
        let x = integrate(&sys, &[0.0; 4], &[5.0, 3.0], 0.0, &[0.0, 1.0, 2.0], &IntegrateOptions::default()).unwrap();
        assert_eq!(x.row(2)[0], 5.0);
        assert_eq!(x.row(2)[1], 3.0);
    }

    #[test]
    fn blow_up_reports_time() {
        struct Blow;
        impl RealRhs for Blow {
            fn state_dim(&self) -> usize {
                1
            }
            fn param_dim(&self) -> usize {
                0
            }
            fn eval<T: Real>(&self, x: &[T], _: &[T], out: &mut [T]) -> Result<()> {
                out[0] = x[0] * x[0];
                Ok(())
            }
        }
        // x' = x^2, x(0) = 1 blows up at t = 1.
        let e = integrate(&Blow, &[], &[1.0], 0.0, &[2.0], &IntegrateOptions::default()).unwrap_err();
        match e {
            Error::Integration { t, .. } => assert!((t - 1.0).abs() < 1e-3, "{t}"),
            other => panic!("{other:?}"),
        }
    }
}

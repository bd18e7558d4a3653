//! Small unconstrained optimizers: L-BFGS with Armijo backtracking for the
//! smooth risk, and a box-clamped Nelder–Mead for the 3-parameter marginal
//! likelihood.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float math without std
use num_traits::Float;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when `|g| < grad_tol * (1 + |f|)`.
    pub grad_tol: f64,
    /// Stop when `|dx| < step_tol * (1 + |x|)`.
    pub step_tol: f64,
    /// Stop after `stall_window` consecutive steps with relative decrease
    /// below `stall_tol` (0 disables).
    pub stall_tol: f64,
    pub stall_window: usize,
    pub armijo: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iter: 5000,
            grad_tol: 1e-6,
            step_tol: 1e-10,
            stall_tol: 1e-14,
            stall_window: 10,
            armijo: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Gradient,
    Step,
    Stalled,
    LineSearch,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct LbfgsReport {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    /// Objective value at the start and after each accepted step.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimizes `f`, which returns the value and writes the gradient.
/// `on_iter(iteration, value)` runs after every accepted step.
pub fn lbfgs<F, C>(mut f: F, x0: &[f64], opts: &LbfgsOptions, mut on_iter: C) -> Result<LbfgsReport>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
    C: FnMut(usize, f64),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g)?;
    let mut evaluations = 1;
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Optimizer {
            iteration: 0,
            last_risk: fx,
        });
    }
    let mut trace = vec![fx];
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut d = vec![0.0; n];
    let mut alpha_buf = vec![0.0; opts.memory];
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut stalled = 0;
    let mut termination = Termination::MaxIter;
    let mut iterations = 0;

    for iter in 0..opts.max_iter {
        let gnorm = norm(&g);
        if gnorm < opts.grad_tol * (1.0 + fx.abs()) {
            termination = Termination::Gradient;
            break;
        }
        // Two-loop recursion for d = -H g.
        d.copy_from_slice(&g);
        for (k, (s, y, rho)) in history.iter().enumerate().rev() {
            let a = rho * dot(s, &d);
            alpha_buf[k] = a;
            d.iter_mut().zip(y).for_each(|(di, yi)| *di -= a * yi);
        }
        let scale = match history.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / gnorm.max(1.0),
        };
        d.iter_mut().for_each(|di| *di *= scale);
        for (k, (s, y, rho)) in history.iter().enumerate() {
            let b = rho * dot(y, &d);
            let a = alpha_buf[k];
            d.iter_mut().zip(s).for_each(|(di, si)| *di += (a - b) * si);
        }
        d.iter_mut().for_each(|di| *di = -*di);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            history.clear();
            d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi / gnorm.max(1.0));
            slope = dot(&g, &d);
        }

        // Armijo backtracking; non-finite trial values count as failures.
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            x_new.iter_mut().zip(&x).zip(&d).for_each(|((xn, xi), di)| *xn = xi + t * di);
            evaluations += 1;
            match f(&x_new, &mut g_new) {
                Ok(v) if v.is_finite() && g_new.iter().all(|gi| gi.is_finite()) => {
                    if v <= fx + opts.armijo * t * slope {
                        accepted = Some(v);
                        break;
                    }
                }
                Ok(_) | Err(_) => {}
            }
            t *= 0.5;
        }
        let Some(f_new) = accepted else {
            termination = Termination::LineSearch;
            break;
        };
        iterations = iter + 1;

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let step = norm(&s);
        let decrease = fx - f_new;
        let x_scale = 1.0 + norm(&x);
        core::mem::swap(&mut x, &mut x_new);
        core::mem::swap(&mut g, &mut g_new);
        fx = f_new;
        trace.push(fx);
        on_iter(iterations, fx);

        if sy > 1e-12 * step * norm(&y) {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        if step < opts.step_tol * x_scale {
            termination = Termination::Step;
            break;
        }
        if opts.stall_tol > 0.0 {
            if decrease <= opts.stall_tol * fx.abs().max(1.0) {
                stalled += 1;
                if stalled >= opts.stall_window {
                    termination = Termination::Stalled;
                    break;
                }
            } else {
                stalled = 0;
            }
        }
    }
    Ok(LbfgsReport {
        gradient_norm: norm(&g),
        x,
        value: fx,
        trace,
        iterations,
        evaluations,
        termination,
    })
}

/// Result of [`nelder_mead`].
#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Nelder–Mead on the box `[lower, upper]` (points are clamped into the box
/// before evaluation). Non-finite values are treated as `+inf`.
pub fn nelder_mead<F>(
    mut f: F,
    x0: &[f64],
    initial_step: f64,
    lower: &[f64],
    upper: &[f64],
    max_evals: usize,
    ftol: f64,
) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let clamp = |p: &mut Vec<f64>| {
        for ((v, lo), hi) in p.iter_mut().zip(lower).zip(upper) {
            *v = v.max(*lo).min(*hi);
        }
    };
    let mut evals = 0;
    let mut eval = |p: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(p);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut p0 = x0.to_vec();
    clamp(&mut p0);
    let v0 = eval(&p0, &mut evals);
    simplex.push((p0.clone(), v0));
    for i in 0..n {
        let mut p = p0.clone();
        p[i] += if p[i] + initial_step <= upper[i] { initial_step } else { -initial_step };
        clamp(&mut p);
        let v = eval(&p, &mut evals);
        simplex.push((p, v));
    }
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        if best.is_finite() && (worst - best).abs() <= ftol * (1.0 + best.abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(p, _)| p[j]).sum::<f64>() / n as f64)
            .collect();
        let toward = |c: f64, from: &[f64]| {
            let mut p: Vec<f64> = centroid.iter().zip(from).map(|(ci, wi)| ci + c * (wi - ci)).collect();
            clamp(&mut p);
            p
        };
        let worst_p = simplex[n].0.clone();
        let pr = toward(-1.0, &worst_p);
        let vr = eval(&pr, &mut evals);
        if vr < simplex[0].1 {
            let pe = toward(-2.0, &worst_p);
            let ve = eval(&pe, &mut evals);
            simplex[n] = if ve < vr { (pe, ve) } else { (pr, vr) };
        } else if vr < simplex[n - 1].1 {
            simplex[n] = (pr, vr);
        } else {
            let (pc, vc) = if vr < simplex[n].1 {
                let p = toward(-0.5, &worst_p);
                let v = eval(&p, &mut evals);
                (p, v)
            } else {
                let p = toward(0.5, &worst_p);
                let v = eval(&p, &mut evals);
                (p, v)
            };
            if vc < simplex[n].1.min(vr) {
                simplex[n] = (pc, vc);
            } else {
                let b = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let mut p: Vec<f64> = b.iter().zip(&item.0).map(|(bi, pi)| bi + 0.5 * (pi - bi)).collect();
                    clamp(&mut p);
                    let v = eval(&p, &mut evals);
                    *item = (p, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    SimplexResult {
        x,
        value,
        evaluations: evals,
    }
}

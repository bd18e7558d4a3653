//! Squared-exponential kernel `k(r) = rho * exp(-r^2 / (2 l^2))`, its
//! derivatives, and the Gram matrices for state/derivative GP models.
//!
//! Convention: `r = a - b` for `k(a, b)`. `pc[i][j] = d/da k(t_i, t_j)`,
//! `cp[i][j] = d/db k(t_i, t_j)`, `cpp[i][j] = d^2/(da db) k(t_i, t_j)`.

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // float math without std
use num_traits::Float;

use crate::Error;
use crate::linalg::{add_diagonal, symmetrize, SpdFactor};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbfHyperparams {
    pub variance: f64,
    pub lengthscale: f64,
}

impl RbfHyperparams {
    pub fn new(variance: f64, lengthscale: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::domain("variance", "must be positive and finite"));
        }
        if !(lengthscale > 0.0 && lengthscale.is_finite()) {
            return Err(Error::domain("lengthscale", "must be positive and finite"));
        }
        Ok(Self {
            variance,
            lengthscale,
        })
    }

    /// Default jitter added to the state Gram matrix.
    pub fn default_jitter(&self) -> f64 {
        1e-6 * self.variance
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        let l2 = self.lengthscale * self.lengthscale;
        self.variance * (-0.5 * r * r / l2).exp()
    }

    /// Derivative with respect to the first argument.
    #[inline]
    pub fn d1(&self, r: f64) -> f64 {
        let l2 = self.lengthscale * self.lengthscale;
        -self.variance * r / l2 * (-0.5 * r * r / l2).exp()
    }

    /// Mixed second derivative.
    #[inline]
    pub fn d2(&self, r: f64) -> f64 {
        let l2 = self.lengthscale * self.lengthscale;
        self.variance * (1.0 / l2 - r * r / (l2 * l2)) * (-0.5 * r * r / l2).exp()
    }
}

pub fn kernel_eval(h: &RbfHyperparams, r: f64) -> f64 {
    h.eval(r)
}

pub fn kernel_d1(h: &RbfHyperparams, r: f64) -> f64 {
    h.d1(r)
}

pub fn kernel_d2(h: &RbfHyperparams, r: f64) -> f64 {
    h.d2(r)
}

#[derive(Debug, Clone)]
pub struct KernelMatrices {
    pub c: DMatrix<f64>,
    pub cp: DMatrix<f64>,
    pub pc: DMatrix<f64>,
    pub cpp: DMatrix<f64>,
}

pub fn gram_matrices(h: &RbfHyperparams, times: &[f64]) -> KernelMatrices {
    let n = times.len();
    let mut c = DMatrix::zeros(n, n);
    let mut pc = DMatrix::zeros(n, n);
    let mut cpp = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let r = times[i] - times[j];
            c[(i, j)] = h.eval(r);
            pc[(i, j)] = h.d1(r);
            cpp[(i, j)] = h.d2(r);
        }
    }
    let cp = -&pc;
    KernelMatrices { c, cp, pc, cpp }
}

/// `D = 'C (C + lambda I)^{-1}` and `A = C'' - 'C (C + lambda I)^{-1} C'`,
/// with the factor of `C + lambda I` kept for later solves.
#[derive(Debug, Clone)]
pub struct ModelMatrices {
    pub d: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub jitter: f64,
    pub c_factor: SpdFactor,
}

pub fn model_matrices(km: &KernelMatrices, jitter: f64) -> Result<ModelMatrices> {
    if !(jitter > 0.0) {
        return Err(Error::domain("jitter", "must be positive"));
    }
    let mut k = km.c.clone();
    add_diagonal(&mut k, jitter);
    let c_factor = SpdFactor::new(k, "C + jitter", jitter)?;
    // W = L^{-1} C', so that 'C K^{-1} C' = W^T W because 'C = C'^T.
    let w = c_factor.half_solve_matrix(&km.cp);
    let mut a = &km.cpp - w.tr_mul(&w);
    symmetrize(&mut a);
    // K^{-1} C' = D^T
    let mut dt = w;
    c_factor.l().tr_solve_lower_triangular_mut(&mut dt);
    Ok(ModelMatrices {
        d: dt.transpose(),
        a,
        jitter,
        c_factor,
    })
}

impl ModelMatrices {
    /// `(C + lambda I)^{-1} x`
    pub fn c_solve(&self, x: &DVector<f64>) -> DVector<f64> {
        self.c_factor.solve(x)
    }
}

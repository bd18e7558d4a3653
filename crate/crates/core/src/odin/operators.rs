//! Per-dimension linear operators behind the risk: `(C + lambda I)^{-1}`,
//! `D`, and `(A + gamma I)^{-1}` with its log-determinant and trace, either
//! from exact `N x N` matrices or from `dim x N` feature matrices.

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // float math without std
use num_traits::Float;

use crate::features::FeatureMatrices;
use crate::kernel::{gram_matrices, model_matrices, RbfHyperparams};
use crate::linalg::{add_diagonal, gram_rows, SpdFactor};
use crate::Result;

#[derive(Debug, Clone)]
pub enum DimOperator {
    Exact(ExactOperator),
    Feature(FeatureOperator),
}

#[derive(Debug, Clone)]
pub struct ExactOperator {
    c_factor: SpdFactor,
    d: DMatrix<f64>,
    a: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct FeatureOperator {
    phi: DMatrix<f64>,
    phi_prime: DMatrix<f64>,
    jitter: f64,
    h_factor: SpdFactor,
    h: DMatrix<f64>,
    p: DMatrix<f64>,
}

/// Factorization of `A + gamma I` for one value of `gamma`.
#[derive(Debug, Clone)]
pub enum GammaFactor {
    Exact { factor: SpdFactor },
    Feature { gamma: f64, m_factor: SpdFactor },
}

/// `x^T (C + lambda I)^{-1} x` and `(C + lambda I)^{-1} x`.
pub struct PriorSolve {
    pub value: f64,
    pub alpha: DVector<f64>,
}

impl DimOperator {
    pub fn exact(hyper: &RbfHyperparams, times: &[f64], jitter: f64) -> Result<Self> {
        let km = gram_matrices(hyper, times);
        let mm = model_matrices(&km, jitter)?;
        Ok(DimOperator::Exact(ExactOperator {
            c_factor: mm.c_factor,
            d: mm.d,
            a: mm.a,
        }))
    }

    pub fn feature(fm: FeatureMatrices, jitter: f64) -> Result<Self> {
        let mut h = gram_rows(&fm.phi);
        add_diagonal(&mut h, jitter);
        let h_factor = SpdFactor::new(h.clone(), "Phi Phi^T + jitter", jitter)?;
        let p = gram_rows(&fm.phi_prime);
        Ok(DimOperator::Feature(FeatureOperator {
            phi: fm.phi,
            phi_prime: fm.phi_prime,
            jitter,
            h_factor,
            h,
            p,
        }))
    }

    pub fn len(&self) -> usize {
        match self {
            DimOperator::Exact(e) => e.d.nrows(),
            DimOperator::Feature(f) => f.phi.ncols(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn prior(&self, x: &DVector<f64>) -> PriorSolve {
        match self {
            DimOperator::Exact(e) => {
                let alpha = e.c_factor.solve(x);
                PriorSolve {
                    value: e.c_factor.quad_form(x),
                    alpha,
                }
            }
            DimOperator::Feature(f) => {
                // min_w |x - Phi^T w|^2 / lambda + |w|^2, attained at
                // w = H^{-1} Phi x, equals x^T (Phi^T Phi + lambda I)^{-1} x.
                let u = f.h_factor.solve(&(&f.phi * x));
                let resid = x - f.phi.tr_mul(&u);
                let value = resid.norm_squared() / f.jitter + u.norm_squared();
                PriorSolve {
                    value,
                    alpha: resid / f.jitter,
                }
            }
        }
    }

    /// `D x`
    pub fn d_apply(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            DimOperator::Exact(e) => &e.d * x,
            DimOperator::Feature(f) => f.phi_prime.tr_mul(&f.h_factor.solve(&(&f.phi * x))),
        }
    }

    /// `D^T v`
    pub fn dt_apply(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            DimOperator::Exact(e) => e.d.tr_mul(v),
            DimOperator::Feature(f) => f.phi.tr_mul(&f.h_factor.solve(&(&f.phi_prime * v))),
        }
    }

    pub fn gamma_factor(&self, gamma: f64) -> Result<GammaFactor> {
        match self {
            DimOperator::Exact(e) => {
                let mut a = e.a.clone();
                add_diagonal(&mut a, gamma);
                Ok(GammaFactor::Exact {
                    factor: SpdFactor::new(a, "A + gamma I", gamma)?,
                })
            }
            DimOperator::Feature(f) => {
                let m = &f.p + &f.h * (gamma / f.jitter);
                Ok(GammaFactor::Feature {
                    gamma,
                    m_factor: SpdFactor::new(m, "Phi' Phi'^T + (gamma/lambda) H", gamma)?,
                })
            }
        }
    }

    /// `z^T (A + gamma I)^{-1} z` and `(A + gamma I)^{-1} z`.
    pub fn deriv(&self, g: &GammaFactor, z: &DVector<f64>) -> (f64, DVector<f64>) {
        match (self, g) {
            (DimOperator::Exact(_), GammaFactor::Exact { factor }) => (factor.quad_form(z), factor.solve(z)),
            (DimOperator::Feature(f), GammaFactor::Feature { gamma, m_factor }) => {
                let v = m_factor.solve(&(&f.phi_prime * z));
                let resid = z - f.phi_prime.tr_mul(&v);
                // Same variational split as the prior term, with the
                // inner weight covariance lambda H^{-1}.
                let value = resid.norm_squared() / gamma + (&f.h * &v).dot(&v) / f.jitter;
                (value, resid / *gamma)
            }
            _ => unreachable!("gamma factor built by a different operator"),
        }
    }

    /// `ln det(A + gamma I)`
    pub fn ln_det(&self, g: &GammaFactor) -> f64 {
        match (self, g) {
            (DimOperator::Exact(_), GammaFactor::Exact { factor }) => factor.ln_det(),
            (DimOperator::Feature(f), GammaFactor::Feature { gamma, m_factor }) => {
                let n = f.phi.ncols() as f64;
                let m = f.phi.nrows() as f64;
                n * gamma.ln() + m_factor.ln_det() - m * (gamma / f.jitter).ln() - f.h_factor.ln_det()
            }
            _ => unreachable!("gamma factor built by a different operator"),
        }
    }

    /// `tr((A + gamma I)^{-1})`
    pub fn trace_inv(&self, g: &GammaFactor) -> f64 {
        match (self, g) {
            (DimOperator::Exact(_), GammaFactor::Exact { factor }) => factor.trace_of_inverse(),
            (DimOperator::Feature(f), GammaFactor::Feature { gamma, m_factor }) => {
                let n = f.phi.ncols() as f64;
                (n - m_factor.trace_of_solve(&f.p)) / gamma
            }
            _ => unreachable!("gamma factor built by a different operator"),
        }
    }

    /// Dense `D` and `A` (reference and testing use).
    pub fn dense_d_a(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        match self {
            DimOperator::Exact(e) => (e.d.clone(), e.a.clone()),
            DimOperator::Feature(f) => {
                let hinv_phi = f.h_factor.solve_matrix(&f.phi);
                let d = f.phi_prime.tr_mul(&hinv_phi);
                let a = f.phi_prime.tr_mul(&f.h_factor.solve_matrix(&f.phi_prime)) * f.jitter;
                (d, a)
            }
        }
    }
}

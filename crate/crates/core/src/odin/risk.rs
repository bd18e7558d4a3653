use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::operators::{DimOperator, GammaFactor};
use super::OdinProblem;
use crate::features::{FeatureMap, FeatureMatrices, QffFeatureMap};
use crate::ode::OdeModel;
use crate::{Error, Result};

/// Risk split into its per-dimension-summed parts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RiskValue {
    pub total: f64,
    pub prior_term: f64,
    pub obs_term: f64,
    pub deriv_term: f64,
    pub logdet_term: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskGradient {
    /// `N x K`
    pub x: DMatrix<f64>,
    pub theta: Vec<f64>,
    /// Derivative with respect to `ln gamma_k` (zero unless gamma is learned).
    pub log_gamma: Vec<f64>,
}

/// Risk evaluator for one problem and one choice of linear operators.
pub struct Risk<'a, M> {
    problem: &'a OdinProblem<M>,
    ops: Vec<DimOperator>,
    fixed: Vec<GammaFactor>,
}

impl<'a, M: OdeModel> Risk<'a, M> {
    /// Exact `N x N` operators.
    pub fn exact(problem: &'a OdinProblem<M>) -> Result<Self> {
        let ops = problem
            .hypers
            .iter()
            .zip(&problem.jitter)
            .map(|(h, &j)| DimOperator::exact(h, &problem.unit_times, j))
            .collect::<Result<Vec<_>>>()?;
        Self::from_operators(problem, ops)
    }

    /// Feature operators from precomputed feature matrices (one per
    /// dimension, columns at the rescaled times).
    pub fn features(problem: &'a OdinProblem<M>, mats: Vec<FeatureMatrices>) -> Result<Self> {
        if mats.len() != problem.state_dim() {
            return Err(Error::Dimension { what: "feature matrices", expected: problem.state_dim(), got: mats.len() });
        }
        let n = problem.len();
        let ops = mats
            .into_iter()
            .zip(&problem.jitter)
            .map(|(fm, &j)| {
                if fm.len() != n {
                    return Err(Error::Dimension { what: "feature matrix columns", expected: n, got: fm.len() });
                }
                DimOperator::feature(fm, j)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_operators(problem, ops)
    }

    /// Quadrature features of the given order for every dimension.
    pub fn qff(problem: &'a OdinProblem<M>, order: usize) -> Result<Self> {
        let mats = problem
            .hypers
            .iter()
            .map(|h| Ok(QffFeatureMap::new(*h, order)?.matrices(&problem.unit_times)))
            .collect::<Result<Vec<_>>>()?;
        Self::features(problem, mats)
    }

    fn from_operators(problem: &'a OdinProblem<M>, ops: Vec<DimOperator>) -> Result<Self> {
        let fixed = ops
            .iter()
            .zip(&problem.gamma)
            .map(|(op, &g)| op.gamma_factor(g))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { problem, ops, fixed })
    }

    pub fn problem(&self) -> &OdinProblem<M> {
        self.problem
    }

    pub fn operators(&self) -> &[DimOperator] {
        &self.ops
    }

    /// Risk at the problem's own `gamma`.
    pub fn value(&self, x: &DMatrix<f64>, theta: &[f64]) -> Result<RiskValue> {
        Ok(self.evaluate(x, theta, None, false)?.0)
    }

    pub fn value_at(&self, x: &DMatrix<f64>, theta: &[f64], gamma: &[f64]) -> Result<RiskValue> {
        Ok(self.evaluate(x, theta, Some(gamma), false)?.0)
    }

    pub fn value_and_gradient(
        &self,
        x: &DMatrix<f64>,
        theta: &[f64],
        gamma: Option<&[f64]>,
    ) -> Result<(RiskValue, RiskGradient)> {
        let (v, g) = self.evaluate(x, theta, gamma, true)?;
        Ok((v, g.expect("gradient requested")))
    }

    /// `F = T f(x, theta)` (`N x K`), plus row Jacobians when asked.
    fn model_terms(
        &self,
        x: &DMatrix<f64>,
        theta: &[f64],
        want_jac: bool,
    ) -> Result<(DMatrix<f64>, Vec<f64>, Vec<f64>)> {
        let p = self.problem;
        let (n, k, q) = (p.len(), p.state_dim(), p.param_dim());
        let mut f = DMatrix::zeros(n, k);
        let mut jx = if want_jac { vec![0.0; n * k * k] } else { Vec::new() };
        let mut jt = if want_jac { vec![0.0; n * k * q] } else { Vec::new() };
        let mut row = vec![0.0; k];
        let mut fr = vec![0.0; k];
        for i in 0..n {
            for j in 0..k {
                row[j] = x[(i, j)];
            }
            if want_jac {
                p.model.jacobians(
                    &row,
                    theta,
                    &mut fr,
                    &mut jx[i * k * k..(i + 1) * k * k],
                    &mut jt[i * k * q..(i + 1) * k * q],
                )?;
            } else {
                p.model.rhs(&row, theta, &mut fr)?;
            }
            for j in 0..k {
                if !fr[j].is_finite() {
                    return Err(Error::NonFinite { what: "f(x, theta)", index: i * k + j });
                }
                f[(i, j)] = p.time_scale * fr[j];
            }
        }
        Ok((f, jx, jt))
    }

    fn evaluate(
        &self,
        x: &DMatrix<f64>,
        theta: &[f64],
        gamma: Option<&[f64]>,
        want_grad: bool,
    ) -> Result<(RiskValue, Option<RiskGradient>)> {
        let p = self.problem;
        let (n, k, q) = (p.len(), p.state_dim(), p.param_dim());
        if x.nrows() != n || x.ncols() != k {
            return Err(Error::Dimension { what: "state matrix", expected: n * k, got: x.nrows() * x.ncols() });
        }
        if theta.len() != q {
            return Err(Error::Dimension { what: "theta", expected: q, got: theta.len() });
        }
        if let Some(i) = x.iter().chain(theta).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "states / theta", index: i });
        }
        let gamma = gamma.unwrap_or(&p.gamma);
        if gamma.len() != k {
            return Err(Error::Dimension { what: "gamma", expected: k, got: gamma.len() });
        }
        let (f, jx, jt) = self.model_terms(x, theta, want_grad)?;
        let mut value = RiskValue::default();
        let mut grad = want_grad.then(|| RiskGradient {
            x: DMatrix::zeros(n, k),
            theta: vec![0.0; q],
            log_gamma: vec![0.0; k],
        });
        let mut betas: Vec<DVector<f64>> = Vec::with_capacity(k);
        for d in 0..k {
            let op = &self.ops[d];
            let fresh;
            let gf = if gamma[d] == p.gamma[d] {
                &self.fixed[d]
            } else {
                fresh = op.gamma_factor(gamma[d])?;
                &fresh
            };
            let xd = x.column(d).into_owned();
            let resid = &xd - p.y.column(d);
            let prior = op.prior(&xd);
            let z = f.column(d) - op.d_apply(&xd);
            let (deriv, beta) = op.deriv(gf, &z);
            value.prior_term += prior.value;
            value.obs_term += resid.norm_squared() / p.sigma2[d];
            value.deriv_term += deriv;
            if p.learn_gamma {
                value.logdet_term += op.ln_det(gf);
            }
            if let Some(g) = grad.as_mut() {
                let gx = prior.alpha * 2.0 + resid * (2.0 / p.sigma2[d]) - op.dt_apply(&beta) * 2.0;
                g.x.column_mut(d).copy_from(&gx);
                if p.learn_gamma {
                    g.log_gamma[d] = gamma[d] * (op.trace_inv(gf) - beta.norm_squared());
                }
            }
            betas.push(beta);
        }
        value.total = value.prior_term + value.obs_term + value.deriv_term + value.logdet_term;
        if let Some(g) = grad.as_mut() {
            // Chain rule through F_k(i) = T f_k(x_i, theta).
            let ts = p.time_scale;
            for i in 0..n {
                let jxi = &jx[i * k * k..(i + 1) * k * k];
                let jti = &jt[i * k * q..(i + 1) * k * q];
                for (r, beta) in betas.iter().enumerate() {
                    let w = 2.0 * ts * beta[i];
                    if w == 0.0 {
                        continue;
                    }
                    for c in 0..k {
                        g.x[(i, c)] += w * jxi[r * k + c];
                    }
                    for c in 0..q {
                        g.theta[c] += w * jti[r * q + c];
                    }
                }
            }
        }
        Ok((value, grad))
    }
}

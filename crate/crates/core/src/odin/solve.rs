use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)] // float math without std
use num_traits::Float;

use super::risk::{Risk, RiskValue};
use crate::ode::OdeModel;
use crate::optim::{lbfgs, LbfgsOptions, Termination};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OptimizeOptions {
    pub lbfgs: LbfgsOptions,
}

#[derive(Debug, Clone)]
pub struct OdinFit {
    /// `N x K`
    pub x: DMatrix<f64>,
    pub theta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub risk: RiskValue,
    pub risk_trace: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

/// Minimizes the risk jointly over states, parameters and (when the problem
/// learns it) `ln gamma`. `on_iter(iteration, risk)` runs after each
/// accepted step.
pub fn optimize<M: OdeModel, C: FnMut(usize, f64)>(
    risk: &Risk<'_, M>,
    x0: &DMatrix<f64>,
    theta0: &[f64],
    options: &OptimizeOptions,
    on_iter: C,
) -> Result<OdinFit> {
    let p = risk.problem();
    let (n, k, q) = (p.len(), p.state_dim(), p.param_dim());
    if x0.nrows() != n || x0.ncols() != k {
        return Err(Error::Dimension { what: "initial states", expected: n * k, got: x0.len() });
    }
    if theta0.len() != q {
        return Err(Error::Dimension { what: "initial theta", expected: q, got: theta0.len() });
    }
    let learn = p.learn_gamma;
    let nx = n * k;
    let mut v0: Vec<f64> = x0.as_slice().to_vec();
    v0.extend_from_slice(theta0);
    if learn {
        v0.extend(p.gamma.iter().map(|g| g.ln()));
    }
    let unpack = |v: &[f64]| {
        let x = DMatrix::from_column_slice(n, k, &v[..nx]);
        let theta = v[nx..nx + q].to_vec();
        let gamma: Vec<f64> = if learn {
            v[nx + q..].iter().map(|l| l.exp()).collect()
        } else {
            p.gamma.clone()
        };
        (x, theta, gamma)
    };
    let objective = |v: &[f64], g: &mut [f64]| -> Result<f64> {
        let (x, theta, gamma) = unpack(v);
        let (val, grad) = risk.value_and_gradient(&x, &theta, Some(&gamma))?;
        g[..nx].copy_from_slice(grad.x.as_slice());
        g[nx..nx + q].copy_from_slice(&grad.theta);
        if learn {
            g[nx + q..].copy_from_slice(&grad.log_gamma);
        }
        Ok(val.total)
    };
    let report = lbfgs(objective, &v0, &options.lbfgs, on_iter)?;
    let (x, theta, gamma) = unpack(&report.x);
    let value = risk.value_at(&x, &theta, &gamma)?;
    Ok(OdinFit {
        x,
        theta,
        gamma,
        risk: value,
        risk_trace: report.trace,
        iterations: report.iterations,
        evaluations: report.evaluations,
        termination: report.termination,
    })
}

//! ODE models, the benchmark systems, adaptive integration, synthetic
//! datasets and the trajectory RMSE.

mod dataset;
mod integrate;
mod systems;

pub use dataset::{column_variances, generate_dataset, linspace, trajectory_rmse, Dataset, NoiseSpec};
pub use integrate::{integrate, IntegrateOptions};
pub use systems::BenchmarkSystem;

use alloc::vec;

use crate::real::{Dual, Real};
use crate::Result;

/// Right-hand side `f(x, theta)` written once for any scalar type.
pub trait RealRhs {
    fn state_dim(&self) -> usize;
    fn param_dim(&self) -> usize;
    fn eval<T: Real>(&self, x: &[T], theta: &[T], out: &mut [T]) -> Result<()>;
}

/// What the integrator and the risk need from a model.
pub trait OdeModel {
    fn state_dim(&self) -> usize;
    fn param_dim(&self) -> usize;

    fn rhs(&self, x: &[f64], theta: &[f64], out: &mut [f64]) -> Result<()>;

    /// Evaluates `f` together with its Jacobians, row-major:
    /// `jx[k * K + j] = d f_k / d x_j`, `jt[k * P + p] = d f_k / d theta_p`.
    fn jacobians(
        &self,
        x: &[f64],
        theta: &[f64],
        f: &mut [f64],
        jx: &mut [f64],
        jt: &mut [f64],
    ) -> Result<()>;
}

impl<S: RealRhs> OdeModel for S {
    fn state_dim(&self) -> usize {
        RealRhs::state_dim(self)
    }

    fn param_dim(&self) -> usize {
        RealRhs::param_dim(self)
    }

    fn rhs(&self, x: &[f64], theta: &[f64], out: &mut [f64]) -> Result<()> {
        self.eval(x, theta, out)
    }

    fn jacobians(
        &self,
        x: &[f64],
        theta: &[f64],
        f: &mut [f64],
        jx: &mut [f64],
        jt: &mut [f64],
    ) -> Result<()> {
        let k = x.len();
        let p = theta.len();
        let mut xd: alloc::vec::Vec<Dual> = x.iter().map(|&v| Dual::cst(v)).collect();
        let mut td: alloc::vec::Vec<Dual> = theta.iter().map(|&v| Dual::cst(v)).collect();
        let mut out = vec![Dual::cst(0.0); k];
        for dir in 0..(k + p) {
            if dir < k {
                xd[dir].eps = 1.0;
            } else {
                td[dir - k].eps = 1.0;
            }
            self.eval(&xd, &td, &mut out)?;
            for row in 0..k {
                if dir < k {
                    jx[row * k + dir] = out[row].eps;
                } else {
                    jt[row * p + dir - k] = out[row].eps;
                }
            }
            if dir < k {
                xd[dir].eps = 0.0;
            } else {
                td[dir - k].eps = 0.0;
            }
        }
        for (fi, o) in f.iter_mut().zip(&out) {
            *fi = o.re;
        }
        if k + p == 0 {
            self.eval(x, theta, f)?;
        }
        Ok(())
    }
}

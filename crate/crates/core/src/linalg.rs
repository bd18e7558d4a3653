//! Thin wrappers around `nalgebra` for the symmetric positive-definite
//! systems that appear everywhere in this crate. No explicit inverse is ever
//! used to apply `A^{-1}`; everything goes through triangular solves.

use nalgebra::{Cholesky, DMatrix, DVector};
#[allow(unused_imports)] // float math without std
use num_traits::Float;

use crate::{Error, Result};

/// Cholesky factor `A = L L^T` of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    l: DMatrix<f64>,
}

impl SpdFactor {
    /// Factorizes `a`. `context` and `jitter` only feed the error message.
    pub fn new(a: DMatrix<f64>, context: &'static str, jitter: f64) -> Result<Self> {
        debug_assert!(a.is_square());
        if let Some(idx) = a.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: context, index: idx });
        }
        match Cholesky::new(a.clone()) {
            Some(chol) => Ok(Self { l: chol.l() }),
            None => {
                let (row, pivot) = first_bad_pivot(a);
                Err(Error::NotPositiveDefinite {
                    context,
                    jitter,
                    pivot,
                    row,
                })
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// `L^{-1} b`
    pub fn half_solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut out = b.clone();
        self.l.solve_lower_triangular_mut(&mut out);
        out
    }

    /// `L^{-1} B`
    pub fn half_solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = b.clone();
        self.l.solve_lower_triangular_mut(&mut out);
        out
    }

    /// `A^{-1} b`
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut out = b.clone();
        self.l.solve_lower_triangular_mut(&mut out);
        self.l.tr_solve_lower_triangular_mut(&mut out);
        out
    }

    /// `A^{-1} B`
    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = b.clone();
        self.l.solve_lower_triangular_mut(&mut out);
        self.l.tr_solve_lower_triangular_mut(&mut out);
        out
    }

    /// `b^T A^{-1} b`, computed as `|L^{-1} b|^2`.
    pub fn quad_form(&self, b: &DVector<f64>) -> f64 {
        self.half_solve(b).norm_squared()
    }

    pub fn ln_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// `tr(A^{-1}) = |L^{-1}|_F^2`.
    pub fn trace_of_inverse(&self) -> f64 {
        let n = self.dim();
        let linv = self.half_solve_matrix(&DMatrix::identity(n, n));
        linv.norm_squared()
    }

    /// `tr(A^{-1} B)` for symmetric `B`, as `tr(L^{-1} B L^{-T})`.
    pub fn trace_of_solve(&self, b: &DMatrix<f64>) -> f64 {
        let x = self.solve_matrix(b);
        x.trace()
    }
}

/// Reruns an unpivoted right-looking Cholesky to locate the first pivot that
/// is not strictly positive.
fn first_bad_pivot(mut a: DMatrix<f64>) -> (usize, f64) {
    let n = a.nrows();
    for k in 0..n {
        let pivot = a[(k, k)];
        if !(pivot > 0.0) || !pivot.is_finite() {
            return (k, pivot);
        }
        let d = pivot.sqrt();
        for i in k..n {
            a[(i, k)] /= d;
        }
        for j in (k + 1)..n {
            let ljk = a[(j, k)];
            for i in j..n {
                let lik = a[(i, k)];
                a[(i, j)] -= lik * ljk;
            }
        }
    }
    // Factorization succeeded here although nalgebra rejected it: report
    // the smallest diagonal entry of L squared.
    let (row, pivot) = (0..n)
        .map(|k| (k, a[(k, k)] * a[(k, k)]))
        .fold((0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
    (row, pivot)
}

/// `(A + A^T) / 2` in place.
pub fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// Adds `value` to the diagonal in place.
pub fn add_diagonal(a: &mut DMatrix<f64>, value: f64) {
    for i in 0..a.nrows().min(a.ncols()) {
        a[(i, i)] += value;
    }
}

/// `X X^T` for a wide matrix, symmetrized exactly.
pub fn gram_rows(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut g = x * x.transpose();
    symmetrize(&mut g);
    g
}

//! Quadrature Fourier features (QFF) for the RBF kernel and its first two
//! derivatives, Gaussian-process regression with derivative observations,
//! and the feature-accelerated ODIN risk for ODE parameter inference.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the experiment
//! harness and the command-line tool live in the `qff-lab` companion crate.
//!
//! Module map:
//!
//! * [`hermite`] – Gauss–Hermite rules, the deterministic input to all features.
//! * [`kernel`] – exact RBF kernel, its derivatives and the Gram/model matrices.
//! * [`features`] – QFF, RFF and RFF-B feature maps and feature matrices.
//! * [`gp`] – exact and feature-space posteriors with derivative observations.
//! * [`odin`] – ODIN risk (exact and feature-based), hyperparameter fitting and
//!   the joint state/parameter optimizer.
//! * [`ode`] – benchmark systems, Dormand–Prince integration, datasets, tRMSE.
//! * [`bounds`] – closed-form error bounds and minimum quadrature orders.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod error;
pub mod features;
pub mod gp;
pub mod hermite;
pub mod kernel;
pub mod linalg;
pub mod ode;
pub mod odin;
pub mod optim;



pub mod real;

pub use error::{Error, Result};
pub use features::{FeatureKind, FeatureMap, FeatureMatrices, QffFeatureMap, RandomFeatureMap};
pub use hermite::{gauss_hermite_rule, QuadratureRule};
pub use kernel::RbfHyperparams;

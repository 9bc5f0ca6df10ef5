//! Tight sample-size bounds for Gaussian Monte-Carlo trace estimation, a
//! stochastic Gauss-Newton solver for nonlinear least squares with many
//! experiments, and a 2D DC-resistivity inverse problem to run it on.
//!
//! Module map:
//!
//! * [`special`]: log-gamma, regularized incomplete gamma, gamma and scaled
//!   chi-squared CDFs.
//! * [`bounds`]: loose and tight sample sizes for the trace estimator.
//! * [`extremal`]: CDF crossing point and extremal envelope of weighted
//!   gamma sums, with Monte-Carlo checks.
//! * [`trace`]: matrix-free trace estimation and coverage experiments.
//! * [`nls`]: sampled misfits, probabilistic gates and the stochastic
//!   Gauss-Newton driver.
//! * [`dcres`]: finite-volume DC-resistivity forward model and synthetic
//!   experiments.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod dcres;
pub mod error;
pub mod extremal;
pub mod linalg;
pub mod nls;
pub mod rng;
pub mod special;
pub mod trace;

pub use error::{Error, Result};

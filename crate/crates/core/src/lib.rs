//! Solver core for the stochastic nonlinear time-fractional diffusion
//! equation
//!
//! ```text
//! u_t + D_t^{1-alpha} (-Laplace) u = f(u) + beta xi^{H1,H2}   on (0, l) x (0, T]
//! ```
//!
//! with zero initial and Dirichlet data, driven by the formal derivative of
//! a fractional Brownian sheet with Hurst exponents `H1, H2 <= 1/2`.
//!
//! The noise is regularized by box averaging (Wong-Zakai), space is
//! discretized by P1 finite elements and time by backward Euler convolution
//! quadrature of the Riemann-Liouville derivative. [`spectral`] holds the
//! Mittag-Leffler machinery used as an independent deterministic oracle and
//! [`convergence`] the coupled Monte Carlo error estimators.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod convergence;
pub mod cq;
mod error;
pub mod fem;
pub mod matrix;
pub mod noise;
pub mod problem;
pub mod quadrature;
pub mod spectral;

pub use crate::error::{Error, Result};
pub use crate::matrix::Matrix;
pub use crate::problem::{NonlinearSource, ProblemSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

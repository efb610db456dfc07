//! Option pricing on forward curves driven by function-valued affine
//! stochastic volatility.
//!
//! Forward curves live in a weighted Sobolev space `H_w` with weight
//! `w(x) = e^{αx}` and are expanded in a Laguerre-generated orthonormal
//! basis. Three volatility models are supported: a pure-jump Lévy
//! specification, an operator-valued BNS model and a finite-rank Wishart
//! process. Prices come from damped Fourier inversion of the affine
//! transform; [`montecarlo`] provides simulation oracles for all three.

// Validation uses `!(x > 0.0)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod curve;
pub mod error;
pub mod montecarlo;
pub mod pricer;
pub mod quadrature;
pub mod riccati_jump;
pub mod riccati_wishart;

pub use basis::{BasisSystem, CurveFn};
pub use curve::{DriftCurve, NelsonSiegelCurve};
pub use error::{Error, Result};
pub use num_complex::Complex64;

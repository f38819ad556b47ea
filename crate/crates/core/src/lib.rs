// SPDX-License-Identifier: MIT OR Apache-2.0

//! CUSUM-based tests for a change in the mean under heteroskedastic and
//! serially correlated errors.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the data
//! generators and the simulation harness work in `f64`.

// `!(x > 0)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dgp;
pub mod drift;
pub mod eigen;
pub mod error;
pub mod kernel_cov;
pub mod lrv;
pub mod montecarlo;
pub mod procedures;
pub mod quad;
pub mod regression;
pub mod scalar;
pub mod series;
pub mod sim;
pub mod spectrum;

pub use error::{Error, Result};
pub use procedures::{run_test, run_tests, MethodId, TestConfig, TestReport};
pub use scalar::Real;

pub type Series64 = series::Series<f64>;
pub type Series32 = series::Series<f32>;
pub type CovKernel64 = kernel_cov::CovKernel<f64>;
pub type Spectrum64 = spectrum::Spectrum<f64>;
pub type LimitSample64 = montecarlo::LimitSample<f64>;
pub type TestConfig64 = procedures::TestConfig<f64>;

//! Derivative estimation for noisy sampled signals with Jacobi-polynomial
//! kernels.
//!
//! - [`specfun`]: Gamma/Beta functions and Jacobi polynomials on `[0, 1]`.
//! - [`kernel`]: minimal and affine kernels, their moments and discretization.
//! - [`estimator`]: sampled signals and sliding-window estimates.
//! - [`stochastic`]: noise models, seeded paths, SNR calibration, Monte Carlo.
//! - [`analysis`]: delay and bias bounds, noise-error moments, surfaces.
//! - [`experiment`]: end-to-end runs, presets and reports.
//!
//! ```
//! use jacobi_diff::estimator::{estimate_series, SampledSignal};
//! use jacobi_diff::kernel::{Direction, EstimatorConfig};
//!
//! let x = SampledSignal::from_fn(0.0, 0.01, 300, |t| t * t)?;
//! // First derivative over the past 0.5 s: 2t, delayed by half the window.
//! let cfg = EstimatorConfig::minimal(1, 0.0, 0.0, Direction::Causal, 0.5, 50)?;
//! let d = estimate_series(&x, &cfg)?;
//! for (t, v) in d.times().zip(&d.estimates) {
//!     // Trapezoid taps add a relative error of 2/m².
//!     assert!((v - 2.0 * (t - 0.25)).abs() <= 1e-3 * v.abs());
//! }
//! # Ok::<(), jacobi_diff::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod kernel;
pub mod specfun;
pub mod stochastic;

pub use error::{Error, Result};
pub use estimator::{estimate_series, SampledSignal};
pub use kernel::{Direction, DiscreteKernel, EndpointRule, EstimatorConfig};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    pub mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    pub mod kernels {}
    #[doc = include_str!("../../../book/src/estimation.md")]
    pub mod estimation {}
    #[doc = include_str!("../../../book/src/noise.md")]
    pub mod noise {}
    #[doc = include_str!("../../../book/src/surfaces.md")]
    pub mod surfaces {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    pub mod experiments {}
}

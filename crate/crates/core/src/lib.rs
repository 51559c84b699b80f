//! Sampling laboratory for the stationary open KPZ equation on an interval.
//!
//! The crate is organized around six subsystems:
//!
//! - [`grid_paths`]: uniform grids, piecewise-linear paths, stream-seeded
//!   randomness, Brownian samplers, and closed-form Brownian facts;
//! - [`gibbs_stationary`]: exact-rejection block-Gibbs sampling of the
//!   two-layer stationary measure with boundary weights (u, v);
//! - [`sigma_variance`]: Monte Carlo estimation of the asymptotic variance,
//!   its per-site decomposition, and scaling-exponent fits;
//! - [`robin_heat`]: the Robin-boundary eigenbasis, heat kernel, and
//!   semigroup;
//! - [`she_solver`]: a semi-implicit solver for the stochastic heat equation
//!   with multiplicative noise and Robin boundaries, plus stationarity and
//!   variance experiments;
//! - [`wedge_lab`]: planar-wedge geometry, the killed-wedge Bessel kernel,
//!   and wedge-survival Monte Carlo.
//!
//! Randomness is always explicit: every sampler takes an
//! [`grid_paths::RngStream`] and is a pure function of its inputs, so batch
//! runs parallelize without losing reproducibility.

pub mod acceptance;
pub mod error;
pub mod gibbs_stationary;
pub mod grid_paths;
pub mod io;
pub mod robin_heat;
pub mod she_solver;
pub mod sigma_variance;
pub mod special;
pub mod stats;
pub mod wedge_lab;

pub use error::{Error, Result};

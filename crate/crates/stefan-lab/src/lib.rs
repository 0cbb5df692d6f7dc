//! Simulation laboratory for the one-dimensional stochastic Stefan problem
//! in its fixed-domain transformed form.
//!
//! The physical model is a density `w(y, t)` diffusing in the liquid
//! region of `(a, b)` around a solid segment `[s-(t), s+(t)]` whose
//! endpoints move by the Stefan condition `ds/dt = -grad w` at the
//! interface. Changing variables `x = y - s+(t)` (and mirrored on the left
//! half) freezes the domain to `(0, lambda)` and turns the front motion
//! into a nonlocal transport term, giving the SPDE
//!
//! `u_t = alpha u_xx - u_x(0+, t) u_x + sigma(x) dW + d eta`,
//!
//! with space-time white noise `dW`, Dirichlet walls, and an optional
//! reflection measure `eta` keeping `u >= 0`.
//!
//! What the crate does:
//!
//! - [`heat_kernel`]: Dirichlet heat kernel by the method of images, its
//!   spatial derivative, and machine verification of the Gaussian bounds
//!   the solution estimates rest on.
//! - [`noise`]: reproducible discrete Brownian sheets and Walsh integrals.
//! - [`cutoff`]: the Lipschitz truncation `T_n`, the weighted norm
//!   `||f||_H = sup |f(x)/x|`, boundary-gradient trace, stopping times and
//!   sample-space classification.
//! - [`mild`]: Picard iteration for the cut-off mild equation, the
//!   reflected time-marching projection scheme, Hölder diagnostics.
//! - [`fd`]: independent explicit finite-difference oracle on the same
//!   noise.
//! - [`malliavin`]: the variational derivative field solved forward from
//!   its closed linear equation, bump-test validation, windowed scaling
//!   estimates and the positivity check.
//! - [`front`]: moving-boundary reconstruction and the inverse transform
//!   to the physical frame.
//! - [`config`] / [`harness`]: run configuration, ensemble orchestration
//!   and report emission; also the engine behind the `stefan-lab` binary.
//!
//! Every run is reproducible from `(config, seed)`: the sheet generator is
//! counter-based and all reductions are order-deterministic.

pub mod config;
pub mod cutoff;
pub mod error;
pub mod fd;
pub mod front;
pub mod grid;
pub mod harness;
pub mod heat_kernel;
pub mod malliavin;
pub mod mild;
mod modal;
pub mod noise;
pub mod profiles;

pub use error::{Error, Result};
pub use grid::GridSpec;

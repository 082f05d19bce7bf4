//! Positivity-preserving time stepping for scalar SDEs with super-linear
//! coefficients.
//!
//! The crate provides
//!
//! * [`coefficients`]: model catalogue (3/2 volatility, Aït-Sahalia short
//!   rate, Lamperti-transformed CIR, user supplied), the truncation mapping
//!   `x ↦ (1/R) ∨ (x ∧ R)` and grid-sampled assumption diagnostics;
//! * [`schemes`]: truncated Euler–Maruyama (TEM), truncated Milstein (TMil)
//!   and the baselines EM, backward EM, log TEM, STEM and STEM2, together
//!   with a path driver;
//! * [`brownian`]: seeded, counter-based Brownian increments on a dyadic fine
//!   grid with exact coarsening;
//! * [`harness`]: Monte Carlo strong-error estimation, rate regression,
//!   positivity-event frequencies, moment estimates, timings and CSV reports.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod brownian;
pub mod coefficients;
pub mod error;
pub mod harness;
pub mod schemes;

pub use error::{Result, SdeError};

//! Driven-Kerr model of cavity magnon-polaritons.
//!
//! * [`model`]: system parameters, Kerr coefficient, hybridization, transmission.
//! * [`cubic`]: steady-state shifts of the driven lower branch and their folds.
//! * [`sweep`]: quasi-static forward/backward scans and hysteresis metrics.
//! * [`dynamics`]: two-mode semiclassical equations, integrator and full steady state.
//! * [`fit`]: hysteresis-aware least squares for `c`, `γ_LP` and `ξ`.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cubic;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod model;
pub mod sweep;
pub mod units;

pub use error::{Error, Result};

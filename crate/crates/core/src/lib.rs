//! Weighted periodic-orbit pressure estimation and equilibrium-state
//! diagnostics for two families of hyperbolic dynamics:
//!
//! * suspension flows over irreducible subshifts of finite type, where an
//!   exact transfer-operator oracle provides pressures and equilibrium
//!   measures to cross-check the orbit estimators;
//! * convex-cocompact Schottky surface groups, whose closed geodesics are
//!   enumerated as free-group conjugacy classes with certified length cutoffs.
//!
//! The estimation layer (`engine`) is backend-agnostic: it consumes closed
//! orbits with cached line integrals and produces pressure estimates,
//! weighted empirical measures, distances to equilibrium, and deviation
//! rates for orbit events.

// Validation sites write `!(x > 0.0)` instead of `x <= 0.0` so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod fuchsian;
pub mod numeric;
pub mod orbits;
pub mod symbolic;
pub mod words;

pub use error::{Error, Result};

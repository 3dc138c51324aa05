//! Exact tail asymptotics for suprema of nonhomogeneous Gaussian random fields
//! whose variance is maximal on a segment, together with Monte Carlo estimators
//! of the Pickands-type constants those asymptotics need and a harness that
//! checks the formulas against direct simulation.
//!
//! Modules:
//! - [`params`]: parameter bundle and tail-regime classification
//! - [`sim`]: exact Gaussian path simulation and path functionals
//! - [`constants`]: closed-form and Monte Carlo Pickands/Piterbarg constants
//! - [`tail`]: leading-order tail formulas
//! - [`validation`]: empirical exceedance probabilities versus the formulas

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod error;
pub mod mc;
pub mod params;
pub mod sim;
pub mod special;
pub mod tail;
pub mod validation;

pub use error::{Error, Result};

//! Hedge costs for a large trader whose own hedging moves the price.
//!
//! The hedge cost `u(S, t)` solves
//!
//! ```text
//! u_t + (σ² S² / 2) · u_SS / (1 − ρ S u_SS)² = 0
//! ```
//!
//! where `ρ ≥ 0` measures illiquidity (`ρ = 0` is Black–Scholes without
//! interest). The crate provides:
//!
//! - [`model`]: parameters, payoffs, the PDE residual and the singular surface;
//! - [`closed_form`]: an explicit family of invariant solutions, its symmetry
//!   group, asymptotics and Greeks;
//! - [`fd`]: fully implicit and explicit finite-difference solvers and a linear
//!   Black–Scholes reference;
//! - [`validation`]: named numerical checks with a key=value report.
//!
//! ```
//! use hedgecost::closed_form::{invariant_u, ClosedFormParams};
//! use hedgecost::model::MarketParams;
//!
//! let market = MarketParams::new(0.35, 0.1, 0.0).unwrap();
//! let member = ClosedFormParams::explicit(0.5, 0.0, 0.0, market.sigma).unwrap();
//! let u = invariant_u(1.0, 0.5, &member, &market).unwrap();
//! assert!((u - 41.453733244580268).abs() < 1e-10);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod closed_form;
pub mod error;
pub mod fd;
pub mod model;
pub mod validation;

pub use error::{Error, Result};

//! Solver for the time-fractional Black–Scholes equation in log-price form,
//!
//! ```text
//!   D^α u = a u_ss + b u_s − c u + f(s, η),   s ∈ [lo, hi],  η ∈ (0, T]
//! ```
//!
//! where `D^α` is the Caputo derivative of order `α ∈ (0, 1]`. Time is
//! discretised with the L1 formula and space with differential quadrature
//! whose weights come from a boundary-modified cubic B-spline basis. A
//! second-order central-difference operator is provided as a baseline.
//!
//! Modules, bottom-up:
//!
//! * [`numerics`]: dense matrices, LU, norms, the gamma function and a
//!   double-double kernel for the ill-conditioned collocation operator.
//! * [`model`]: coefficients, coordinate transforms, problem definitions.
//! * [`weights`]: spline basis and the quadrature weight matrices `X`, `Y`.
//! * [`l1`]: L1 coefficients and the history (memory) term.
//! * [`solver`]: operator assembly and time marching.
//! * [`stability`]: Varah/Neumann bounds on `‖L⁻¹‖∞`.
//! * [`analysis`]: error norms, observed orders and refinement sweeps.
//! * [`golden`]: published reference tables and cell-by-cell comparison.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod golden;
pub mod l1;
pub mod model;
pub mod numerics;
pub mod solver;
pub mod stability;
pub mod weights;

pub use error::{Error, Result};

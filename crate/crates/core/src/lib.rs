//! Adaptive feedback-feedforward gradient descent (AFFGD) for convex, locally
//! smooth objectives.
//!
//! The crate is organised bottom-up:
//!
//! - [`problems`]: objectives (quadratics, logistic regression), seeded data,
//!   finite-difference and reference-optimum oracles.
//! - [`geometry`]: the two-point local smoothness estimate and the linesearch
//!   that resolves the implicit feedforward bound.
//! - [`controllers`]: stepsize policies (AFFGD, constant, open-loop ramp,
//!   backtracking, robustness variants, external adaptive baselines).
//! - [`engine`]: the gradient descent recursion with perturbation injection and
//!   trajectory recording.
//! - [`certify`]: replay of the Lyapunov inequalities and rate bounds along a
//!   recorded trajectory.
//! - [`io`]: CSV and JSON persistence.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod controllers;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod io;
pub mod problems;

pub use error::{Error, Result};

pub type Vector = nalgebra::DVector<f64>;
pub type Matrix = nalgebra::DMatrix<f64>;

/// Norms below this are treated as zero (converged gradient, coincident points).
pub const DEGENERATE_NORM: f64 = 1e-300;

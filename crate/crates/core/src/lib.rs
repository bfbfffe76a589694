//! Continuous-time proximal flows for composite convex optimization.
//!
//! The crate provides smooth and nonsmooth oracles, the Moreau, forward-backward
//! and proximal augmented Lagrangian envelopes, four first-order flows with Euler
//! and RK4 integrators, discrete reference algorithms, and sampling-based rate
//! certificates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod cli;
pub mod envelopes;
pub mod error;
pub mod flows;
pub mod linalg;
pub mod oracles;
pub mod problem;
pub mod reference;

pub use error::{Error, Result};
pub use flows::{integrate, FlowKind, FlowSystem, Method, Trajectory};
pub use linalg::{Matrix, Vector};
pub use oracles::{ProxOracle, SmoothFunction, SmoothOracle};
pub use problem::{catalog, ProblemSpec};

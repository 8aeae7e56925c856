//! Exact finite-n winding-number statistics for nonintersecting Brownian
//! bridges on the circle with drift.
//!
//! The walkers' winding law is encoded in discrete orthogonal polynomials on
//! the shifted lattice `{(k + τ)/n}` with the complex Gaussian weight
//! `exp(-(nT/2)(x² - 2iμx))`. This crate builds those polynomials, turns
//! Hankel-determinant ratios into winding distributions, evaluates the
//! correlation kernel, and compares everything with closed-form large-n
//! asymptotics and a random-walk simulator.

pub mod asymptotics;
pub mod dd;
pub mod error;
pub mod kernel;
pub mod measure;
pub mod model;
pub mod orthopoly;
pub mod par;
pub mod quadrature;
pub mod simulator;
pub mod winding;

pub use error::{Error, Result};
pub use measure::{Engine, Precision};
pub use model::ModelParams;
pub use orthopoly::{build_op_system, build_op_system_with, OpSystem};
pub use par::Exec;
pub use winding::{
    winding_distribution, winding_distribution_with, WindingDistribution, WindingOptions,
};

//! Thermodynamic-length toolkit for slowly driven open Gaussian systems.
//!
//! The crate computes the two Riemannian metric tensors that govern
//! slow-driving work statistics (the excess-work metric `xi` and the
//! work-fluctuation metric `lambda`), solves geodesic boundary-value
//! problems on the control manifold, and evaluates work functionals
//! along arbitrary protocols. A small catalog ships ready-made models
//! (damped oscillator, displacement driving, classical relaxation)
//! together with their analytic closed forms, which double as oracles
//! for the generic pipeline.

pub mod catalog;
pub mod gaussian;
pub mod geometry;
pub mod matfun;
pub mod metrics;
pub mod work;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

//! Constrained least squares in the Gaussian sequence model.
//!
//! Given `Y = mu + Z` with `Z` standard Gaussian and a closed convex set
//! `K`, the estimator is the projection `P_K(Y)`. This crate provides exact
//! projections for a catalog of sets, Monte Carlo estimates of the
//! localized Gaussian complexity
//! `f_mu(t) = E sup { Z . (nu - mu) : nu in K, |nu - mu| <= t } - t^2 / 2`
//! and its maximizer `t_mu`, risk estimation, and rate sweeps.

pub mod complexity;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod point;
pub mod rng;
pub mod sets;

pub use error::{Error, Result};
pub use point::Point;
pub use sets::{ConstraintSet, ProjectionResult, SetDescriptor};

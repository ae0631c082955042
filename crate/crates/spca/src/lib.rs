//! Energy-efficiency maximization for MIMO interference channels by
//! successive pseudoconvex approximation.
//!
//! Every type is generic over the scalar ([`Real`], implemented for `f32` and
//! `f64`); the aliases below fix the common `f64` instantiation.

pub mod algorithms;
pub mod baselines;
pub mod error;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod solvers;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Scenario = model::Scenario<f64>;
pub type Scenario32 = model::Scenario<f32>;
pub type CovarianceSet = model::CovarianceSet<f64>;
pub type CovarianceSet32 = model::CovarianceSet<f32>;
pub type Matrix = linalg::CMat<f64>;
pub type Matrix32 = linalg::CMat<f32>;
pub type SolverConfig = algorithms::SolverConfig<f64>;
pub type SolverConfig32 = algorithms::SolverConfig<f32>;
pub type Solution = algorithms::Solution<f64>;
pub type Solution32 = algorithms::Solution<f32>;

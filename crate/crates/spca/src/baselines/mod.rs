//! Comparison algorithms.

pub mod slbm;

pub use slbm::{slbm_surrogate, solve_slbm, SlbmConfig, SlbmSurrogate};

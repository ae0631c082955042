//! Experiment harness: JSON configuration, seeded scenario generation,
//! solver dispatch and CSV/JSON reporting.
//!
//! Trace files have the columns of [`report::TRACE_COLUMNS`]. Objectives
//! and rate slacks are reported in the configured units (bits divide the
//! internal nats by `ln 2`); `ms` is 0 unless timing is enabled.

pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::{Algorithm, RunConfig, ScenarioDoc, Units};
pub use error::{CliError, Result};
pub use run::{compare, run, solve};

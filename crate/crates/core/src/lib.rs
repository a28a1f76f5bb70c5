//! Online GPU frame-time modeling.
//!
//! Traces and a synthetic workload oracle live in [`trace`], offline feature
//! selection in [`features`], the online estimators in [`estimator`], the
//! differential frame-time model in [`model`] and the DVFS policy simulation
//! in [`governor`]. [`config`] reads the TOML run configuration and [`cli`]
//! drives it all from the command line.

// `!(x > 0.0)` is the NaN-rejecting form used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod error;
pub mod estimator;
pub mod features;
pub mod governor;
pub mod metrics;
pub mod model;
pub mod replay;
pub mod trace;

pub use error::{Error, Result, TraceError};

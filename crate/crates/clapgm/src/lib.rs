//! File formats, synthetic data, benchmarking and the command-line front end
//! for the `clapgm_core` graph matcher.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod config;
pub mod error;
pub mod pair;
pub mod report;
pub mod synth;

pub use error::{Error, Result};

//! Command-line orchestration for the sampler diagnostics: config parsing,
//! experiment runners, output directories and run manifests.
//!
//! Every run writes its artifacts and a `manifest.json` into one output
//! directory. Passing that manifest back as `--config` reproduces the
//! numeric artifacts byte for byte.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod experiments;
pub mod hrange;
pub mod manifest;

pub use cli::run;
pub use config::{load_config, ExperimentSpec};

//! Anomaly detection for power-system telemetry.
//!
//! The crate covers the whole pipeline: loading PMU/relay/log CSV exports
//! against a feature manifest, stratified splitting with train-only median
//! imputation, extremely randomized trees and random forests grown from
//! scratch, a logistic-regression baseline, binary classification metrics
//! with validation-driven threshold selection, and a genetic-algorithm
//! wrapper that searches feature subsets by balancing macro F1 against
//! subset size. The `harness` module ties these into reproducible
//! experiments; the `gridsentry` binary exposes them on the command line.
//!
//! Every random decision flows from explicit seeds through counter-based
//! generators, so repeated runs produce identical models, metrics, and
//! byte-identical result tables.

pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod ga;
pub mod harness;
pub mod metrics;
pub mod preprocess;

pub use error::{Error, Result};

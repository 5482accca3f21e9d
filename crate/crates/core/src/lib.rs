//! Speech-based depression detection with cross-data multilevel attention,
//! and the EEG time-frequency analysis used to relate model outputs to
//! oscillatory brain activity.
//!
//! Pipeline: [`features`] turns audio into 32-dim frame vectors,
//! [`segment`] cuts them into half-overlapping windows, [`model`] trains and
//! evaluates one classifier per emotional condition, [`eval`] runs
//! person-independent cross-validation, and [`eeg`] computes ERSP band power
//! and correlates it with the per-speaker depression probabilities.

pub mod app;
pub mod config;
pub mod corpus;
pub mod eeg;
pub mod eval;
pub mod error;
pub mod features;
pub mod model;
pub mod nn;
pub mod segment;
pub mod stats;
pub mod synth;
mod pool;

pub use error::{Error, Result};

//! Contingency-labeled operating-condition datasets for power networks and
//! online-trained neural security classifiers.
//!
//! The pipeline runs bottom-up: [`grid`] holds the network model and case
//! files, [`powerflow`] solves it, [`security`] screens contingencies and
//! labels operating conditions, [`dataset`] generates labeled samples,
//! [`mlp`] and [`optim`] provide the classifier and its update rules, and
//! [`trainer`] runs the two-phase online-learning experiment.

pub mod dataset;
pub mod error;
pub mod grid;
pub mod mlp;
pub mod optim;
pub mod powerflow;
pub mod security;
pub mod trainer;

pub use error::{Error, Result};

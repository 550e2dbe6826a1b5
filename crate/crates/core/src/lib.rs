//! Estimation of the probability of causation (PC) from unit-level data.
//!
//! The crate partitions a binary-exposure, binary-outcome dataset into the
//! four classical sets (unexposed survivors A, unexposed deaths B, exposed
//! survivors C, exposed deaths D), matches every exposed death against the
//! unexposed pool on covariates, and reads PC off as the fraction of matches
//! that land in A. Around that core sit the theoretical bounds on PC, the
//! classical probability-of-necessity bounds computed from contingency
//! tables, distribution estimators (bootstrap / resampling / ensemble),
//! synthetic data generators, and a group-to-individual filter.
//!
//! All stochastic routines take an explicit seed and are deterministic for a
//! given seed, platform-independently.

pub mod distribution;
pub mod error;
pub mod estimator;
pub mod g2i;
pub mod io;
pub mod matching;
pub mod model;
pub mod pn;
pub mod report;
pub mod synth;

pub use error::{Error, Result};

//! Multi-treatment causal inference for tabular corpora via
//! inverse-probability-of-treatment weighting (IPW).
//!
//! The pipeline: ingest observation records ([`dataset`]), build a
//! standardized design with two-way interactions ([`design`]), estimate
//! treatment-membership probabilities with a multinomial logit ([`glm`],
//! [`propensity`]), check overlap and covariate balance ([`propensity`],
//! [`balance`]), and estimate unconfounded group means, weighted spreads,
//! and pairwise causal effects ([`estimator`]). A synthetic-corpus generator
//! with known ground truth ([`synth`]) backs end-to-end validation.
//!
//! All operations are pure transformations of immutable inputs and are
//! deterministic for fixed inputs and seeds.

pub mod balance;
pub mod dataset;
pub mod design;
pub mod error;
pub mod estimator;
pub mod glm;
pub mod propensity;
pub mod rng;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};

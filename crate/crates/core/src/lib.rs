//! Off-policy actor-critic (Off-PAC) learning with linear function
//! approximation.
//!
//! The crate provides the learners ([`actor::OffPacAgent`],
//! [`critic::CriticState`] and the [`baselines`]), hashed tile coding in
//! [`features`], three continuous benchmark problems plus small tabular MDPs
//! in [`envs`], exact tabular computations in [`oracle`], and an experiment
//! [`harness`] that sweeps hyperparameters and writes CSV results.

pub mod actor;
pub mod baselines;
pub mod critic;
pub mod envs;
pub mod error;
pub mod features;
pub mod harness;
pub mod oracle;
pub mod policies;
pub mod trace;

pub use error::{Diverged, Error, Result};

//! Tabular goal-conditioned reinforcement learning with hindsight goal
//! relabeling.
//!
//! The crate provides three small deterministic multi-goal environments, a
//! replay buffer implementing the Next-Future strategy next to the classic
//! Final / Future / Episode / Random strategies, tabular Q-learning and
//! truncated-quantile-critic learners, and a seeded experiment harness that
//! writes learning curves, summaries and value probes as CSV.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod cli;
pub mod env;
pub mod error;
pub mod harness;
pub mod mdp;
pub mod probe;
pub mod relabel;

pub use error::{Error, Result};

//! Synthesis and verification of asynchronous authentication mechanisms.
//!
//! A mechanism over `n` credentials is described by a monotone Boolean
//! function of the credentials presented to it. Given independent per-credential
//! fault probabilities (safe, loss, leak, theft), [`search::scenario_based_search`]
//! finds a mechanism whose success probability is within a user-chosen margin of
//! the best achievable one. [`baselines`] provides exhaustive and symmetric
//! reference points, and [`execsim`] replays the underlying asynchronous
//! execution model to check that a Boolean mechanism succeeds exactly on its
//! profile.

pub mod baselines;
pub mod casestudy;
pub mod cli;
pub mod credmodel;
mod error;
pub mod execsim;
pub mod mechanism;
pub mod search;

pub use error::{Error, Result};

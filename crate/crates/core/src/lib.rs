//! Online estimation of the discrepancy between the *expected* information
//! gain a robot predicts for a viewpoint and the *specific* (realized) gain it
//! measures afterwards.
//!
//! The crate is organised bottom-up:
//!
//! - [`estimator`]: the improvement function, a per-(position, gain-bin) table
//!   of follow-the-regularized-leader learners, plus the importance-weighted
//!   bandit variant.
//! - [`gridworld`]: a 2D occupancy-grid simulator with ray casting, noisy
//!   depth sensing, log-odds updates and entropy-based gain computation.
//! - [`planner`]: lattice path enumeration, corrected scoring and randomized
//!   selection.
//! - [`regret_lab`]: losses, hindsight optima, regret accounting and bound
//!   checkers, including a synthetic adversarial discrepancy game.
//! - [`harness`]: reproducible episodes, sweeps and mode comparisons.

// `!(x > 0.0)` style checks are meant to reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod gridworld;
pub mod harness;
pub mod planner;
pub mod regret_lab;
pub mod stats;

pub use error::{Error, Result};

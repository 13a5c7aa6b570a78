//! Randomized least-squares value iteration and the machinery around it:
//! finite-horizon MDPs with exact solvers, benchmark environments, linear
//! feature maps, Bayesian ridge regression, exploration agents, stochastic
//! optimism checks and an experiment harness.

pub mod agents;
pub mod environments;
pub mod error;
pub mod features;
pub mod harness;
pub mod mdp;
pub mod optimism;
pub mod regression;
pub mod sampling;

pub use error::{Error, Result};

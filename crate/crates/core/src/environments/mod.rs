//! Benchmark environments: the deterministic chain, the logistic
//! recommendation model and random Dirichlet MDPs.

mod chain;
mod dirichlet;
mod recommendation;

pub use chain::{chain_regret_lower_bound, make_chain, LEFT, RIGHT};
pub use dirichlet::{centered_terminal_rewards, sample_dirichlet_mdp};
pub use recommendation::{make_recommendation, sample_recommendation_instance, RecommendationEnv};

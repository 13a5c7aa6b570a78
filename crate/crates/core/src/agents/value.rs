use std::sync::Arc;

use nalgebra::DVector;
use rand::SeedableRng;

use crate::agents::planning::{Estimator, Planner, Targets};
use crate::agents::{AgentConfig, AgentRng, Exploration};
use crate::error::Result;
use crate::features::FeatureMap;
use crate::mdp::{Agent, EpisodeLog};

/// Which regression produces the coefficients at the start of each episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueMethod {
    Rlsvi,
    Lsvi,
    ContextualBandit,
}

/// An agent that fits per-period linear Q estimates from all past episodes
/// and acts on them for a whole episode.
#[derive(Debug, Clone)]
pub struct ValueAgent {
    method: ValueMethod,
    exploration: Exploration,
    cfg: AgentConfig,
    fmap: Arc<FeatureMap>,
    planner: Planner,
    thetas: Vec<DVector<f64>>,
    rng: AgentRng,
}

impl ValueAgent {
    pub fn new(
        method: ValueMethod,
        exploration: Exploration,
        fmap: Arc<FeatureMap>,
        horizon: usize,
        cfg: AgentConfig,
        seed: u64,
    ) -> Result<Self> {
        match method {
            ValueMethod::Lsvi => super::positive("lambda", cfg.lambda)?,
            _ => cfg.check_sigma_lambda()?,
        }
        match exploration {
            Exploration::Boltzmann { eta } => AgentConfig { eta, ..cfg.clone() }.check_eta()?,
            Exploration::EpsilonGreedy { epsilon } => {
                AgentConfig { epsilon, ..cfg.clone() }.check_epsilon()?
            }
            Exploration::Greedy => {}
        }
        let planner = Planner::new(&fmap, horizon)?;
        let k = fmap.num_features();
        Ok(Self {
            method,
            exploration,
            cfg,
            planner,
            thetas: vec![DVector::zeros(k); horizon],
            fmap,
            rng: AgentRng::seed_from_u64(seed),
        })
    }

    /// RLSVI with greedy action selection.
    pub fn rlsvi(fmap: Arc<FeatureMap>, horizon: usize, cfg: AgentConfig, seed: u64) -> Result<Self> {
        Self::new(ValueMethod::Rlsvi, Exploration::Greedy, fmap, horizon, cfg, seed)
    }

    /// LSVI with Boltzmann exploration at temperature `cfg.eta`.
    pub fn lsvi_boltzmann(
        fmap: Arc<FeatureMap>,
        horizon: usize,
        cfg: AgentConfig,
        seed: u64,
    ) -> Result<Self> {
        let eta = cfg.eta;
        Self::new(ValueMethod::Lsvi, Exploration::Boltzmann { eta }, fmap, horizon, cfg, seed)
    }

    /// LSVI with ε-greedy exploration at rate `cfg.epsilon`.
    pub fn lsvi_epsilon_greedy(
        fmap: Arc<FeatureMap>,
        horizon: usize,
        cfg: AgentConfig,
        seed: u64,
    ) -> Result<Self> {
        let epsilon = cfg.epsilon;
        Self::new(ValueMethod::Lsvi, Exploration::EpsilonGreedy { epsilon }, fmap, horizon, cfg, seed)
    }

    /// Randomized regression on immediate rewards, greedy selection.
    pub fn contextual_bandit(
        fmap: Arc<FeatureMap>,
        horizon: usize,
        cfg: AgentConfig,
        seed: u64,
    ) -> Result<Self> {
        Self::new(ValueMethod::ContextualBandit, Exploration::Greedy, fmap, horizon, cfg, seed)
    }

    pub fn method(&self) -> ValueMethod {
        self.method
    }

    /// Coefficients in use for the current episode.
    pub fn coefficients(&self) -> &[DVector<f64>] {
        &self.thetas
    }

    pub fn episodes_seen(&self) -> usize {
        self.planner.episodes()
    }

    /// Recomputes the per-period coefficients from all data seen so far.
    pub fn replan(&mut self) -> Result<()> {
        let (sigma, lambda) = (self.cfg.sigma, self.cfg.lambda);
        let (targets, estimator) = match self.method {
            ValueMethod::Rlsvi => (Targets::Bootstrapped, Estimator::Sample { sigma, lambda }),
            ValueMethod::Lsvi => (Targets::Bootstrapped, Estimator::PlainRidge { lambda }),
            ValueMethod::ContextualBandit => (Targets::Immediate, Estimator::Sample { sigma, lambda }),
        };
        self.thetas = self.planner.plan(&self.fmap, targets, estimator, &mut self.rng)?;
        Ok(())
    }

    pub fn record(&mut self, log: &EpisodeLog) -> Result<()> {
        self.planner.push_episode(&self.fmap, log)
    }
}

impl Agent for ValueAgent {
    /// Panics if the regression cannot be factorized even after jitter.
    fn begin_episode(&mut self) {
        if let Err(e) = self.replan() {
            panic!("planning failed: {e}");
        }
    }

    fn act(&mut self, period: usize, state: usize) -> usize {
        self.exploration
            .act(self.thetas[period].as_slice(), &self.fmap, period, state, &mut self.rng)
    }

    fn end_episode(&mut self, log: &EpisodeLog) {
        if let Err(e) = self.record(log) {
            panic!("episode rejected: {e}");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::make_chain;
    use crate::features::coherent_basis;
    use crate::mdp::{simulate_episode, solve_optimal};
    use rand_chacha::ChaCha8Rng;

    fn chain_setup(n: usize, seed: u64) -> (crate::mdp::FiniteHorizonMdp, Arc<FeatureMap>) {
        let mdp = make_chain(n).unwrap();
        let vf = solve_optimal(&mdp);
        let fmap = coherent_basis(&vf, n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        (mdp, Arc::new(fmap))
    }

    #[test]
    fn first_episode_uses_zero_coefficients() {
        let (_, fmap) = chain_setup(4, 0);
        let mut agent = ValueAgent::rlsvi(fmap, 4, AgentConfig::default(), 1).unwrap();
        agent.begin_episode();
        assert!(agent.coefficients().iter().all(|t| t.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn rlsvi_solves_small_chain() {
        let n = 6;
        let (mdp, fmap) = chain_setup(n, 2);
        let cfg = AgentConfig { sigma: 0.01, lambda: 1.0, ..AgentConfig::default() };
        let mut agent = ValueAgent::rlsvi(fmap, n, cfg, 3).unwrap();
        let mut env = ChaCha8Rng::seed_from_u64(4);
        let rewards: Vec<f64> = (0..200)
            .map(|_| simulate_episode(&mdp, &mut agent, &mut env).episode_reward())
            .collect();
        let tail: f64 = rewards[150..].iter().sum::<f64>() / 50.0;
        assert!(tail > 0.9, "tail reward {tail}");
    }

    #[test]
    fn same_seed_same_trajectories() {
        let (mdp, fmap) = chain_setup(5, 5);
        let run = || {
            let mut agent =
                ValueAgent::lsvi_boltzmann(fmap.clone(), 5, AgentConfig::default(), 9).unwrap();
            let mut env = ChaCha8Rng::seed_from_u64(10);
            (0..20).map(|_| simulate_episode(&mdp, &mut agent, &mut env)).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn rejects_bad_parameters() {
        let (_, fmap) = chain_setup(4, 6);
        let bad_eta = AgentConfig { eta: 0.0, ..AgentConfig::default() };
        assert!(ValueAgent::lsvi_boltzmann(fmap.clone(), 4, bad_eta, 0).is_err());
        let bad_eps = AgentConfig { epsilon: 2.0, ..AgentConfig::default() };
        assert!(ValueAgent::lsvi_epsilon_greedy(fmap.clone(), 4, bad_eps, 0).is_err());
        assert!(ValueAgent::rlsvi(fmap, 9, AgentConfig::default(), 0).is_err());
    }
}

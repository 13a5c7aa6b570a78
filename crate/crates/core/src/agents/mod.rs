//! Episodic agents: RLSVI in batch, incremental and continual forms, LSVI
//! with dithering, the linear contextual bandit, Bernoulli Thompson sampling
//! and a myopic oracle.

mod bandits;
mod continual;
mod incremental;
mod planning;
mod select;
mod value;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::EpisodeLog;

pub use bandits::{bernoulli_ts_act, oracle_myopic_act, BernoulliTs, MyopicOracle};
pub use continual::{perturbation_step, run_continual, ContinualMode, ContinualRlsvi, Transition};
pub use incremental::IncrementalRlsvi;
pub use planning::{
    linear_contextual_bandit_plan, lsvi_plan, rlsvi_plan, Estimator, Planner, Targets,
};
pub use select::{
    boltzmann_act, boltzmann_probabilities, epsilon_greedy_act, greedy_act, Exploration,
};
pub use value::{ValueAgent, ValueMethod};

/// Generator owned by every stochastic agent.
pub type AgentRng = rand_chacha::ChaCha8Rng;

/// Step sizes `ν_l` for the incremental recursions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Decay {
    Constant(f64),
    /// `ν_l` for `l < len`; the last entry repeats afterwards.
    Schedule(Vec<f64>),
}

impl Decay {
    pub fn at(&self, episode: usize) -> f64 {
        match self {
            Decay::Constant(v) => *v,
            Decay::Schedule(s) => s.get(episode).or(s.last()).copied().unwrap_or(0.0),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: &f64| (0.0..=1.0).contains(v);
        let valid = match self {
            Decay::Constant(v) => ok(v),
            Decay::Schedule(s) => s.iter().all(ok),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::InvalidArgument("decay must lie in [0, 1]".into()))
        }
    }
}

/// Hyperparameters shared by the agents. Each agent reads only its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub sigma: f64,
    pub lambda: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub discount: f64,
    pub decay: Decay,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            lambda: 1.0,
            eta: 1.0,
            epsilon: 0.1,
            discount: 0.9,
            decay: Decay::Constant(0.0),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

impl AgentConfig {
    pub fn check_sigma_lambda(&self) -> Result<()> {
        positive("sigma", self.sigma)?;
        positive("lambda", self.lambda)
    }

    pub fn check_eta(&self) -> Result<()> {
        positive("eta", self.eta)
    }

    pub fn check_epsilon(&self) -> Result<()> {
        if (0.0..=1.0).contains(&self.epsilon) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("epsilon must lie in [0, 1], got {}", self.epsilon)))
        }
    }

    pub fn check_discount(&self) -> Result<()> {
        if self.discount > 0.0 && self.discount < 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("discount must lie in (0, 1), got {}", self.discount)))
        }
    }

    pub fn check_decay(&self) -> Result<()> {
        self.decay.validate()
    }
}

/// Append-only record of completed episodes.
#[derive(Debug, Clone, Default)]
pub struct ReplayStore {
    episodes: Vec<EpisodeLog>,
}

impl ReplayStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a complete episode. All episodes must share one horizon.
    pub fn push(&mut self, log: EpisodeLog) -> Result<()> {
        let h = log.horizon();
        if log.states.len() != h + 1 || log.rewards.len() != h {
            return Err(Error::InvalidArgument("incomplete episode log".into()));
        }
        if let Some(expected) = self.horizon() {
            if expected != h {
                return Err(Error::PeriodMismatch { features: expected, needed: h });
            }
        }
        self.episodes.push(log);
        Ok(())
    }

    pub fn episodes(&self) -> &[EpisodeLog] {
        &self.episodes
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn horizon(&self) -> Option<usize> {
        self.episodes.first().map(EpisodeLog::horizon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_schedule_repeats_last() {
        let d = Decay::Schedule(vec![0.5, 0.25]);
        assert_eq!(d.at(0), 0.5);
        assert_eq!(d.at(7), 0.25);
        assert_eq!(Decay::Constant(0.1).at(99), 0.1);
        assert!(Decay::Schedule(vec![1.5]).validate().is_err());
    }

    #[test]
    fn config_round_trips_and_validates() {
        let cfg = AgentConfig { decay: Decay::Schedule(vec![0.1, 0.0]), ..AgentConfig::default() };
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<AgentConfig>(&json).unwrap(), cfg);
        let partial: AgentConfig = serde_json::from_str(r#"{"sigma": 0.01}"#).unwrap();
        assert_eq!(partial.sigma, 0.01);
        assert_eq!(partial.lambda, 1.0);
        assert!(AgentConfig { sigma: 0.0, ..cfg.clone() }.check_sigma_lambda().is_err());
        assert!(AgentConfig { epsilon: 1.1, ..cfg.clone() }.check_epsilon().is_err());
        assert!(AgentConfig { discount: 1.0, ..cfg.clone() }.check_discount().is_err());
        assert!(AgentConfig { eta: -1.0, ..cfg }.check_eta().is_err());
    }

    #[test]
    fn store_rejects_mixed_horizons() {
        let log = |h: usize| EpisodeLog {
            states: vec![0; h + 1],
            actions: vec![0; h],
            rewards: vec![0.0; h],
            terminal_reward: 0.0,
        };
        let mut store = ReplayStore::new();
        store.push(log(3)).unwrap();
        assert!(store.push(log(2)).is_err());
        let mut bad = log(3);
        bad.states.pop();
        assert!(store.push(bad).is_err());
        assert_eq!(store.len(), 1);
    }
}

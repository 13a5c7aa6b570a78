use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::agents::AgentConfig;
use crate::error::{Error, Result};

/// Boltzmann temperatures swept in the recommendation study.
pub const DEFAULT_ETA_GRID: [f64; 6] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ChainCoherent,
    ChainAgnostic,
    Recommendation,
    TabularRegret,
    VerifyOptimism,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::ChainCoherent,
        Experiment::ChainAgnostic,
        Experiment::Recommendation,
        Experiment::TabularRegret,
        Experiment::VerifyOptimism,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::ChainCoherent => "chain-coherent",
            Experiment::ChainAgnostic => "chain-agnostic",
            Experiment::Recommendation => "recommendation",
            Experiment::TabularRegret => "tabular-regret",
            Experiment::VerifyOptimism => "verify-optimism",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Rlsvi,
    LsviBoltzmann,
    LsviEpsilonGreedy,
    IncrementalRlsvi,
    ContextualBandit,
    BernoulliTs,
    Myopic,
    /// Every algorithm that applies to the experiment.
    All,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Rlsvi,
        Algorithm::LsviBoltzmann,
        Algorithm::LsviEpsilonGreedy,
        Algorithm::IncrementalRlsvi,
        Algorithm::ContextualBandit,
        Algorithm::BernoulliTs,
        Algorithm::Myopic,
        Algorithm::All,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Rlsvi => "rlsvi",
            Algorithm::LsviBoltzmann => "lsvi-boltzmann",
            Algorithm::LsviEpsilonGreedy => "lsvi-epsilon-greedy",
            Algorithm::IncrementalRlsvi => "incremental-rlsvi",
            Algorithm::ContextualBandit => "contextual-bandit",
            Algorithm::BernoulliTs => "bernoulli-ts",
            Algorithm::Myopic => "myopic",
            Algorithm::All => "all",
        }
    }

    /// Agents that only need a feature map and a horizon.
    pub fn is_value_based(&self) -> bool {
        matches!(
            self,
            Algorithm::Rlsvi
                | Algorithm::LsviBoltzmann
                | Algorithm::LsviEpsilonGreedy
                | Algorithm::IncrementalRlsvi
                | Algorithm::ContextualBandit
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm '{s}'")))
    }
}

/// Fully resolved experiment settings. Fields that an experiment does not
/// use are ignored by it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Chain length, product count, or state count of the tabular study.
    pub num_states: usize,
    /// Actions per state in the tabular study.
    pub num_actions: usize,
    /// Episode length. Chain: must equal `num_states`. Recommendation: must equal `recommendations`.
    pub horizon: Option<usize>,
    /// Products recommended per episode.
    pub recommendations: usize,
    /// Basis functions per period for the chain studies.
    pub num_features: usize,
    /// Basis distortion for the agnostic chain study.
    pub rho: f64,
    /// Standard deviation of the recommendation preference weights.
    pub scale: f64,
    pub episodes: usize,
    /// Repetitions per instance (chain and tabular: independent runs).
    pub runs: usize,
    /// Recommendation problem instances.
    pub instances: usize,
    /// Repetitions per instance for the two bandit baselines.
    pub bandit_runs: usize,
    pub algorithm: Algorithm,
    pub agent: AgentConfig,
    pub eta_grid: Vec<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    /// Monte-Carlo draws per optimism case.
    pub mc_samples: usize,
    /// Grid points for the single-crossing sweep.
    pub crossing_grid: usize,
    /// Random Dirichlet specs in the optimism sweep.
    pub optimism_specs: usize,
}

impl ExperimentConfig {
    /// Full-scale settings of each study.
    pub fn defaults(experiment: Experiment) -> Self {
        let base = Self {
            experiment,
            num_states: 50,
            num_actions: 2,
            horizon: None,
            recommendations: 5,
            num_features: 20,
            rho: 0.0,
            scale: 2.0,
            episodes: 400,
            runs: 200,
            instances: 50,
            bandit_runs: 100,
            algorithm: Algorithm::Rlsvi,
            agent: AgentConfig { sigma: 1e-2, lambda: 1.0, ..AgentConfig::default() },
            eta_grid: DEFAULT_ETA_GRID.to_vec(),
            seed: 0,
            out: None,
            workers: None,
            mc_samples: 100_000,
            crossing_grid: 10_000,
            optimism_specs: 20,
        };
        match experiment {
            Experiment::ChainCoherent => base,
            Experiment::ChainAgnostic => Self {
                num_features: 11,
                agent: AgentConfig { sigma: 1e-3f64.sqrt(), lambda: 1.0, ..AgentConfig::default() },
                ..base
            },
            Experiment::Recommendation => Self {
                num_states: 10,
                episodes: 600,
                runs: 5,
                algorithm: Algorithm::All,
                agent: AgentConfig { sigma: 1e-3f64.sqrt(), lambda: 0.2, ..AgentConfig::default() },
                ..base
            },
            Experiment::TabularRegret => Self {
                num_states: 5,
                horizon: Some(4),
                episodes: 2000,
                runs: 20,
                agent: AgentConfig { sigma: 1.0, lambda: 5.0, ..AgentConfig::default() },
                ..base
            },
            Experiment::VerifyOptimism => base,
        }
    }

    /// Defaults for `experiment`, then `overrides` key by key (JSON object,
    /// `agent` merged field by field).
    pub fn merged(experiment: Experiment, overrides: &[Value]) -> Result<Self> {
        let mut value = serde_json::to_value(Self::defaults(experiment))?;
        for layer in overrides {
            let Value::Object(map) = layer else {
                return Err(Error::Config("configuration must be a JSON object".into()));
            };
            for (k, v) in map {
                if k == "experiment" {
                    let named: Experiment = serde_json::from_value(v.clone())
                        .map_err(|e| Error::Config(format!("experiment: {e}")))?;
                    if named != experiment {
                        return Err(Error::Config(format!(
                            "configuration is for '{named}' but '{experiment}' was requested"
                        )));
                    }
                    continue;
                }
                match (value.get_mut(k), v) {
                    (Some(Value::Object(dst)), Value::Object(src)) => {
                        for (ak, av) in src {
                            dst.insert(ak.clone(), av.clone());
                        }
                    }
                    (Some(slot), _) => *slot = v.clone(),
                    (None, _) => return Err(Error::Config(format!("unknown configuration key '{k}'"))),
                }
            }
        }
        let lambda_set = overrides
            .iter()
            .any(|l| l.get("agent").and_then(|a| a.get("lambda")).is_some());
        let mut cfg: Self = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        if experiment == Experiment::TabularRegret && !lambda_set {
            // the tabular prior scales with the number of states
            cfg.agent.lambda = cfg.num_states as f64;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Episode length implied by the experiment.
    pub fn resolved_horizon(&self) -> usize {
        match self.experiment {
            Experiment::ChainCoherent | Experiment::ChainAgnostic => self.num_states,
            Experiment::Recommendation => self.recommendations,
            Experiment::TabularRegret => self.horizon.unwrap_or(4),
            Experiment::VerifyOptimism => 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.episodes == 0 || self.runs == 0 {
            return fail("episodes and runs must be at least 1".into());
        }
        let cfg = &self.agent;
        let value_checks = |algo: Algorithm| -> Result<()> {
            match algo {
                Algorithm::LsviBoltzmann => cfg.check_eta()?,
                Algorithm::LsviEpsilonGreedy => cfg.check_epsilon()?,
                Algorithm::IncrementalRlsvi => cfg.check_decay()?,
                _ => {}
            }
            cfg.check_sigma_lambda()
        };
        let to_config = |e: Error| Error::Config(e.to_string());
        match self.experiment {
            Experiment::ChainCoherent | Experiment::ChainAgnostic => {
                if self.num_states < 2 {
                    return fail(format!("chain needs N >= 2, got {}", self.num_states));
                }
                if let Some(h) = self.horizon {
                    if h != self.num_states {
                        return fail(format!("chain horizon must equal N ({}), got {h}", self.num_states));
                    }
                }
                let min_k = if self.experiment == Experiment::ChainCoherent { 2 } else { 1 };
                if self.num_features < min_k {
                    return fail(format!("K must be at least {min_k}, got {}", self.num_features));
                }
                if !(self.rho >= 0.0 && self.rho.is_finite()) {
                    return fail(format!("rho must be finite and >= 0, got {}", self.rho));
                }
                if !self.algorithm.is_value_based() {
                    return fail(format!("algorithm '{}' does not apply to the chain study", self.algorithm));
                }
                value_checks(self.algorithm).map_err(to_config)
            }
            Experiment::Recommendation => {
                if self.recommendations == 0 || self.recommendations > self.num_states {
                    return fail(format!(
                        "need 1 <= J <= N, got J={} N={}",
                        self.recommendations, self.num_states
                    ));
                }
                if self.num_states > 20 {
                    return fail(format!("N={} is too large for an exact solve", self.num_states));
                }
                if let Some(h) = self.horizon {
                    if h != self.recommendations {
                        return fail(format!("recommendation horizon must equal J ({}), got {h}", self.recommendations));
                    }
                }
                if self.instances == 0 || self.bandit_runs == 0 {
                    return fail("instances and bandit_runs must be at least 1".into());
                }
                if !(self.scale >= 0.0 && self.scale.is_finite()) {
                    return fail(format!("c must be finite and >= 0, got {}", self.scale));
                }
                if matches!(self.algorithm, Algorithm::IncrementalRlsvi | Algorithm::LsviEpsilonGreedy) {
                    return fail(format!("algorithm '{}' is not part of the recommendation study", self.algorithm));
                }
                if matches!(self.algorithm, Algorithm::LsviBoltzmann | Algorithm::All)
                    && (self.eta_grid.is_empty() || self.eta_grid.iter().any(|e| !(*e > 0.0 && e.is_finite())))
                {
                    return fail("eta grid must be nonempty and positive".into());
                }
                cfg.check_sigma_lambda().map_err(to_config)
            }
            Experiment::TabularRegret => {
                if self.num_states == 0 || self.num_actions == 0 || self.resolved_horizon() == 0 {
                    return fail("S, A and H must be at least 1".into());
                }
                if !self.algorithm.is_value_based() {
                    return fail(format!("algorithm '{}' does not apply to the tabular study", self.algorithm));
                }
                value_checks(self.algorithm).map_err(to_config)
            }
            Experiment::VerifyOptimism => {
                if self.mc_samples < crate::optimism::MIN_OPTIMISM_SAMPLES {
                    return fail(format!(
                        "mc_samples must be at least {}",
                        crate::optimism::MIN_OPTIMISM_SAMPLES
                    ));
                }
                if self.crossing_grid < crate::optimism::MIN_CROSSING_GRID {
                    return fail(format!(
                        "crossing_grid must be at least {}",
                        crate::optimism::MIN_CROSSING_GRID
                    ));
                }
                if self.optimism_specs == 0 {
                    return fail("optimism_specs must be at least 1".into());
                }
                Ok(())
            }
        }
    }
}

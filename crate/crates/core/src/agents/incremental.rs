use std::sync::Arc;

use nalgebra::DVector;
use rand::SeedableRng;

use crate::agents::{AgentConfig, AgentRng};
use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::mdp::{Agent, EpisodeLog};
use crate::regression::{sample_posterior, GaussianPosterior, PrecisionTracker};

/// RLSVI with constant per-episode cost. Each period keeps a precision
/// matrix and moment vector updated from the latest episode only, with
/// bootstrapped targets taken from the coefficients used in that episode.
///
/// The first episode acts on zero coefficients, like the batch agent.
#[derive(Debug, Clone)]
pub struct IncrementalRlsvi {
    cfg: AgentConfig,
    fmap: Arc<FeatureMap>,
    trackers: Vec<PrecisionTracker>,
    thetas: Vec<DVector<f64>>,
    episodes: usize,
    rng: AgentRng,
}

impl IncrementalRlsvi {
    pub fn new(fmap: Arc<FeatureMap>, horizon: usize, cfg: AgentConfig, seed: u64) -> Result<Self> {
        cfg.check_sigma_lambda()?;
        cfg.check_decay()?;
        if fmap.horizon() < horizon {
            return Err(Error::PeriodMismatch { features: fmap.horizon(), needed: horizon });
        }
        let k = fmap.num_features();
        let trackers = (0..horizon)
            .map(|_| PrecisionTracker::new(k, cfg.lambda))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            cfg,
            fmap,
            trackers,
            thetas: vec![DVector::zeros(k); horizon],
            episodes: 0,
            rng: AgentRng::seed_from_u64(seed),
        })
    }

    pub fn horizon(&self) -> usize {
        self.trackers.len()
    }

    pub fn coefficients(&self) -> &[DVector<f64>] {
        &self.thetas
    }

    pub fn tracker(&self, period: usize) -> &PrecisionTracker {
        &self.trackers[period]
    }

    /// `N(θ̄, Σ)` of one period.
    pub fn posterior(&self, period: usize) -> Result<GaussianPosterior> {
        self.trackers[period].posterior()
    }

    /// Applies both recursions for `log`, then draws fresh coefficients.
    pub fn step(&mut self, log: &EpisodeLog) -> Result<()> {
        let horizon = self.horizon();
        if log.horizon() != horizon {
            return Err(Error::PeriodMismatch { features: horizon, needed: log.horizon() });
        }
        let decay = self.cfg.decay.at(self.episodes);
        for h in 0..horizon {
            let target = if h + 1 == horizon {
                log.rewards[h] + log.terminal_reward
            } else {
                log.rewards[h] + self.fmap.max_q(h + 1, log.states[h + 1], self.thetas[h + 1].as_slice())
            };
            let row = self.fmap.row(h, log.states[h], log.actions[h]);
            self.trackers[h].rank_one_update(&row, target, self.cfg.sigma, decay);
        }
        for h in 0..horizon {
            let post = self.trackers[h].posterior()?;
            self.thetas[h] = sample_posterior(&post, &mut self.rng)?;
        }
        self.episodes += 1;
        Ok(())
    }
}

impl Agent for IncrementalRlsvi {
    fn act(&mut self, period: usize, state: usize) -> usize {
        let q = self.fmap.q_row(period, state, self.thetas[period].as_slice());
        crate::agents::greedy_act(&q, &mut self.rng)
    }

    fn end_episode(&mut self, log: &EpisodeLog) {
        if let Err(e) = self.step(log) {
            panic!("incremental update failed: {e}");
        }
    }
}

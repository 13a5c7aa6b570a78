//! Backward regression over periods: RLSVI, LSVI and the contextual-bandit
//! variant that regresses on immediate rewards only.
//!
//! [`Planner`] caches each period's feature rows and Gram matrix as episodes
//! arrive. The design matrix of a period only ever grows, so `AᵀA` is
//! accumulated once; `Aᵀb` is rebuilt every episode because the bootstrapped
//! targets move with the next period's coefficients.

use nalgebra::DVector;
use rand::Rng;

use crate::agents::{AgentConfig, ReplayStore};
use crate::error::{Error, Result};
use crate::features::{FeatureMap, FeatureRow};
use crate::mdp::EpisodeLog;
use crate::regression::{
    plain_ridge_from_normal_equations, posterior_from_normal_equations, sample_from_normal_equations,
    GaussianPosterior, NormalEquations,
};

/// How regression targets are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Targets {
    /// `r_ih + max_α (Φ_{h+1} θ_{h+1})(s_{i,h+1}, α)`, and `r_ih + r_iH` at the last period.
    Bootstrapped,
    /// `r_ih` alone.
    Immediate,
}

/// How a period's coefficients are produced from its regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    /// Draw from the ridge posterior (RLSVI).
    Sample { sigma: f64, lambda: f64 },
    /// Ridge posterior mean without sampling.
    PosteriorMean { sigma: f64, lambda: f64 },
    /// `(AᵀA + λI)⁻¹Aᵀb` (LSVI).
    PlainRidge { lambda: f64 },
}

#[derive(Debug, Clone)]
struct PeriodCache {
    rows: Vec<FeatureRow>,
    rewards: Vec<f64>,
    next_states: Vec<usize>,
    terminal: Vec<f64>,
    normal: NormalEquations,
}

/// Incrementally maintained regression inputs for every period.
#[derive(Debug, Clone)]
pub struct Planner {
    horizon: usize,
    periods: Vec<PeriodCache>,
    ingested: usize,
}

impl Planner {
    pub fn new(fmap: &FeatureMap, horizon: usize) -> Result<Self> {
        if fmap.horizon() < horizon {
            return Err(Error::PeriodMismatch { features: fmap.horizon(), needed: horizon });
        }
        let k = fmap.num_features();
        Ok(Self {
            horizon,
            periods: (0..horizon)
                .map(|_| PeriodCache {
                    rows: Vec::new(),
                    rewards: Vec::new(),
                    next_states: Vec::new(),
                    terminal: Vec::new(),
                    normal: NormalEquations::zeros(k),
                })
                .collect(),
            ingested: 0,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Number of episodes absorbed so far.
    pub fn episodes(&self) -> usize {
        self.ingested
    }

    pub fn push_episode(&mut self, fmap: &FeatureMap, log: &EpisodeLog) -> Result<()> {
        if log.horizon() != self.horizon {
            return Err(Error::PeriodMismatch { features: self.horizon, needed: log.horizon() });
        }
        for (h, cache) in self.periods.iter_mut().enumerate() {
            let row = fmap.row(h, log.states[h], log.actions[h]);
            cache.normal.add_gram_row(&row);
            cache.rows.push(row);
            cache.rewards.push(log.rewards[h]);
            cache.next_states.push(log.states[h + 1]);
            cache.terminal.push(log.terminal_reward);
        }
        self.ingested += 1;
        Ok(())
    }

    /// Absorbs every episode of `store` not yet seen.
    pub fn sync(&mut self, fmap: &FeatureMap, store: &ReplayStore) -> Result<()> {
        for log in &store.episodes()[self.ingested..] {
            self.push_episode(fmap, log)?;
        }
        Ok(())
    }

    fn normal_equations(
        &self,
        fmap: &FeatureMap,
        period: usize,
        next_theta: &[f64],
        targets: Targets,
    ) -> NormalEquations {
        let cache = &self.periods[period];
        let mut normal = NormalEquations {
            gram: cache.normal.gram.clone(),
            moment: DVector::zeros(fmap.num_features()),
        };
        let last = period + 1 == self.horizon;
        for (i, row) in cache.rows.iter().enumerate() {
            let b = match targets {
                Targets::Immediate => cache.rewards[i],
                Targets::Bootstrapped if last => cache.rewards[i] + cache.terminal[i],
                Targets::Bootstrapped => {
                    cache.rewards[i] + fmap.max_q(period + 1, cache.next_states[i], next_theta)
                }
            };
            normal.add_moment(row, b);
        }
        normal
    }

    /// Ridge posterior of one period given the next period's coefficients.
    pub fn posterior(
        &self,
        fmap: &FeatureMap,
        period: usize,
        next_theta: &[f64],
        targets: Targets,
        sigma: f64,
        lambda: f64,
    ) -> Result<GaussianPosterior> {
        posterior_from_normal_equations(
            &self.normal_equations(fmap, period, next_theta, targets),
            sigma,
            lambda,
        )
    }

    /// Coefficients for every period, computed from `H−1` down to 0.
    /// With no data all coefficients are zero and nothing is sampled.
    pub fn plan<R: Rng + ?Sized>(
        &self,
        fmap: &FeatureMap,
        targets: Targets,
        estimator: Estimator,
        rng: &mut R,
    ) -> Result<Vec<DVector<f64>>> {
        self.solve_backward(fmap, targets, |normal| match estimator {
            Estimator::Sample { sigma, lambda } => {
                sample_from_normal_equations(normal, sigma, lambda, rng)
            }
            Estimator::PosteriorMean { sigma, lambda } => {
                Ok(posterior_from_normal_equations(normal, sigma, lambda)?.mean)
            }
            Estimator::PlainRidge { lambda } => plain_ridge_from_normal_equations(normal, lambda),
        })
    }

    fn solve_backward(
        &self,
        fmap: &FeatureMap,
        targets: Targets,
        mut solve: impl FnMut(&NormalEquations) -> Result<DVector<f64>>,
    ) -> Result<Vec<DVector<f64>>> {
        let k = fmap.num_features();
        let mut thetas = vec![DVector::zeros(k); self.horizon];
        if self.ingested == 0 {
            return Ok(thetas);
        }
        let zero = DVector::zeros(k);
        for h in (0..self.horizon).rev() {
            let next = if h + 1 < self.horizon { &thetas[h + 1] } else { &zero };
            let normal = self.normal_equations(fmap, h, next.as_slice(), targets);
            thetas[h] = solve(&normal)?;
        }
        Ok(thetas)
    }
}

fn planner_for(store: &ReplayStore, fmap: &FeatureMap) -> Result<Planner> {
    let horizon = store.horizon().unwrap_or(fmap.horizon());
    let mut planner = Planner::new(fmap, horizon)?;
    planner.sync(fmap, store)?;
    Ok(planner)
}

/// Randomized least-squares value iteration over the whole store.
pub fn rlsvi_plan<R: Rng + ?Sized>(
    store: &ReplayStore,
    fmap: &FeatureMap,
    cfg: &AgentConfig,
    rng: &mut R,
) -> Result<Vec<DVector<f64>>> {
    planner_for(store, fmap)?.plan(
        fmap,
        Targets::Bootstrapped,
        Estimator::Sample { sigma: cfg.sigma, lambda: cfg.lambda },
        rng,
    )
}

/// Least-squares value iteration: ridge point estimates, no sampling.
pub fn lsvi_plan(store: &ReplayStore, fmap: &FeatureMap, cfg: &AgentConfig) -> Result<Vec<DVector<f64>>> {
    let lambda = cfg.lambda;
    planner_for(store, fmap)?.solve_backward(fmap, Targets::Bootstrapped, |normal| {
        plain_ridge_from_normal_equations(normal, lambda)
    })
}

/// Randomized regression on immediate rewards only (no value propagation).
pub fn linear_contextual_bandit_plan<R: Rng + ?Sized>(
    store: &ReplayStore,
    fmap: &FeatureMap,
    cfg: &AgentConfig,
    rng: &mut R,
) -> Result<Vec<DVector<f64>>> {
    planner_for(store, fmap)?.plan(
        fmap,
        Targets::Immediate,
        Estimator::Sample { sigma: cfg.sigma, lambda: cfg.lambda },
        rng,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::make_chain;
    use crate::mdp::{solve_optimal, EpisodeLog};
    use crate::sampling::MeanEstimate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain_walk(n: usize, actions: &[usize]) -> EpisodeLog {
        let mdp = make_chain(n).unwrap();
        let mut states = vec![0];
        let mut rewards = Vec::new();
        for (h, &a) in actions.iter().enumerate() {
            let o = mdp.outcomes(h, states[h], a)[0];
            rewards.push(o.reward);
            states.push(o.next);
        }
        EpisodeLog { states, actions: actions.to_vec(), rewards, terminal_reward: 0.0 }
    }

    #[test]
    fn empty_store_plans_zero() {
        let fmap = FeatureMap::identity(4, 2, 4);
        let cfg = AgentConfig::default();
        let store = ReplayStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for plan in [
            rlsvi_plan(&store, &fmap, &cfg, &mut rng).unwrap(),
            lsvi_plan(&store, &fmap, &cfg).unwrap(),
            linear_contextual_bandit_plan(&store, &fmap, &cfg, &mut rng).unwrap(),
        ] {
            assert_eq!(plan.len(), 4);
            assert!(plan.iter().all(|t| t.iter().all(|v| *v == 0.0)));
        }
    }

    #[test]
    fn unsampled_rlsvi_equals_lsvi() {
        let mut store = ReplayStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..30 {
            let acts: Vec<usize> = (0..5).map(|_| rng.random_range(0..2)).collect();
            store.push(chain_walk(5, &acts)).unwrap();
        }
        store.push(chain_walk(5, &[1, 1, 1, 1, 1])).unwrap();
        let vf = solve_optimal(&make_chain(5).unwrap());
        let fmap = crate::features::coherent_basis(&vf, 4, &mut rng).unwrap();
        let cfg = AgentConfig { sigma: 1.0, lambda: 0.7, ..AgentConfig::default() };
        let lsvi = lsvi_plan(&store, &fmap, &cfg).unwrap();
        let mut planner = Planner::new(&fmap, 5).unwrap();
        planner.sync(&fmap, &store).unwrap();
        let means = planner
            .plan(&fmap, Targets::Bootstrapped, Estimator::PosteriorMean { sigma: 1.0, lambda: 0.7 }, &mut rng)
            .unwrap();
        for h in 0..5 {
            assert!((&lsvi[h] - &means[h]).abs().max() < 1e-10);
        }
    }

    #[test]
    fn lsvi_recovers_q_star_on_visited_pairs() {
        // Tabular features, every pair on the chain visited at every period.
        let n = 4;
        let vf = solve_optimal(&make_chain(n).unwrap());
        let fmap = FeatureMap::identity(n, 2, n);
        let mut store = ReplayStore::new();
        for code in 0..(1usize << n) {
            let acts: Vec<usize> = (0..n).map(|h| code >> h & 1).collect();
            store.push(chain_walk(n, &acts)).unwrap();
        }
        let cfg = AgentConfig { lambda: 1e-9, ..AgentConfig::default() };
        let theta = lsvi_plan(&store, &fmap, &cfg).unwrap();
        let mut planner = Planner::new(&fmap, n).unwrap();
        planner.sync(&fmap, &store).unwrap();
        let mut checked = 0;
        for h in 0..n {
            for (i, row) in planner.periods[h].rows.iter().enumerate() {
                let idx = row[0].0;
                let (s, a) = (idx / 2, idx % 2);
                assert!((theta[h][idx] - vf.q(h, s, a)).abs() < 1e-6, "h={h} i={i}");
                checked += 1;
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn tabular_last_period_posterior_law() {
        // Φ = I, λ = S, σ = 1: θ̂(s,a) ~ N(Σn R̄ / (Σn + λ), 1 / (Σn + λ))
        let n = 3;
        let fmap = FeatureMap::identity(n, 2, 1);
        let rbar = [0.4, -0.1, -0.3];
        let mut store = ReplayStore::new();
        let counts = [(0usize, 1usize, 0usize, 3usize), (0, 1, 1, 2), (0, 1, 2, 1)];
        for &(s, a, next, c) in &counts {
            for _ in 0..c {
                store
                    .push(EpisodeLog {
                        states: vec![s, next],
                        actions: vec![a],
                        rewards: vec![0.0],
                        terminal_reward: rbar[next],
                    })
                    .unwrap();
            }
        }
        let cfg = AgentConfig { sigma: 1.0, lambda: n as f64, ..AgentConfig::default() };
        let total = 6.0;
        let mean = (3.0 * 0.4 + 2.0 * -0.1 + 1.0 * -0.3) / (total + 3.0);
        let var = 1.0 / (total + 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut m = MeanEstimate::default();
        let mut sq = MeanEstimate::default();
        for _ in 0..20_000 {
            let th = rlsvi_plan(&store, &fmap, &cfg, &mut rng).unwrap();
            let x = th[0][1];
            m.push(x);
            sq.push((x - mean) * (x - mean));
        }
        assert!((m.mean() - mean).abs() < 3.0 * m.std_error());
        assert!((sq.mean() - var).abs() < 3.0 * sq.std_error());
    }

    #[test]
    fn vanishing_noise_concentrates_at_mean() {
        let mut store = ReplayStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..60 {
            let acts: Vec<usize> = (0..4).map(|_| rng.random_range(0..2)).collect();
            store.push(chain_walk(4, &acts)).unwrap();
        }
        let fmap = FeatureMap::identity(4, 2, 4);
        let cfg = AgentConfig { sigma: 1e-12, lambda: 1.0, ..AgentConfig::default() };
        let sampled = rlsvi_plan(&store, &fmap, &cfg, &mut rng).unwrap();
        let mut planner = Planner::new(&fmap, 4).unwrap();
        planner.sync(&fmap, &store).unwrap();
        let next = DVector::zeros(8);
        let post = planner
            .posterior(&fmap, 3, next.as_slice(), Targets::Bootstrapped, 1e-12, 1.0)
            .unwrap();
        // visited coordinates concentrate; unvisited keep the N(0, 1/λ) prior
        for (idx, v) in post.mean.iter().enumerate() {
            if planner.periods[3].normal.gram[(idx, idx)] > 0.0 {
                assert!((sampled[3][idx] - v).abs() <= 1e-4);
            }
        }
    }

    #[test]
    fn bandit_ignores_future_value() {
        // Rewards only on the final transition out of green: bandit coefficients
        // stay zero at early periods, bootstrapped ones do not.
        let n = 3;
        let fmap = FeatureMap::identity(n, 2, n);
        let mut store = ReplayStore::new();
        for _ in 0..10 {
            store.push(chain_walk(n, &[1, 1, 0])).unwrap();
        }
        let cfg = AgentConfig { sigma: 1e-6, lambda: 1.0, ..AgentConfig::default() };
        let mut planner = Planner::new(&fmap, n).unwrap();
        planner.sync(&fmap, &store).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bandit = planner
            .plan(&fmap, Targets::Immediate, Estimator::PosteriorMean { sigma: cfg.sigma, lambda: cfg.lambda }, &mut rng)
            .unwrap();
        let rlsvi = planner
            .plan(&fmap, Targets::Bootstrapped, Estimator::PosteriorMean { sigma: cfg.sigma, lambda: cfg.lambda }, &mut rng)
            .unwrap();
        assert!(bandit[0].iter().all(|v| v.abs() < 1e-9));
        assert!(bandit[1].iter().all(|v| v.abs() < 1e-9));
        assert!(rlsvi[0][1] > 0.9);
        assert!(rlsvi[1][3] > 0.9);
        let _ = linear_contextual_bandit_plan(&store, &fmap, &cfg, &mut rng).unwrap();
    }

    #[test]
    fn single_period_bandit_matches_rlsvi() {
        let fmap = FeatureMap::identity(3, 2, 1);
        let mut store = ReplayStore::new();
        for (s, a, r) in [(0, 1, 1.0), (1, 0, 0.0), (2, 1, 1.0)] {
            store
                .push(EpisodeLog { states: vec![s, 0], actions: vec![a], rewards: vec![r], terminal_reward: 0.0 })
                .unwrap();
        }
        let cfg = AgentConfig::default();
        let a = rlsvi_plan(&store, &fmap, &cfg, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let b = linear_contextual_bandit_plan(&store, &fmap, &cfg, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert_eq!(a, b);
    }
}

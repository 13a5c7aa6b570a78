use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};

use crate::agents::{greedy_act, AgentConfig, AgentRng};
use crate::error::{Error, Result};
use crate::features::{FeatureMap, FeatureRow};
use crate::mdp::FiniteHorizonMdp;
use crate::regression::{
    cholesky_with_jitter, posterior_from_normal_equations, standard_normal_vector, NormalEquations,
};

/// One step `(x_t, a_t, r_t, x_{t+1})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next: usize,
}

/// How the Gram matrix is obtained each step. Both give identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContinualMode {
    /// Rebuild `AᵀA` from every stored transition.
    FullRebuild,
    /// Add only the newest row to a running `AᵀA`.
    CachedGram,
}

/// `w' = √(1−γ²)·w + γ·L z` with `L Lᵀ = Σ`, so `w' ~ N(√(1−γ²) w, γ²Σ)`.
pub fn perturbation_step<R: Rng + ?Sized>(
    w: &DVector<f64>,
    discount: f64,
    covariance: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let chol = cholesky_with_jitter(covariance)?;
    let z = standard_normal_vector(w.len(), rng);
    Ok(w * (1.0 - discount * discount).sqrt() + chol.l() * z * discount)
}

/// RLSVI for an infinite-horizon discounted problem. Period 0 of the
/// feature map is used at every step. Regression targets are rebuilt
/// against the latest coefficients on every step.
#[derive(Debug, Clone)]
pub struct ContinualRlsvi {
    cfg: AgentConfig,
    fmap: Arc<FeatureMap>,
    mode: ContinualMode,
    rows: Vec<FeatureRow>,
    rewards: Vec<f64>,
    next_states: Vec<usize>,
    gram: DMatrix<f64>,
    theta: DVector<f64>,
    w: DVector<f64>,
    rng: AgentRng,
}

impl ContinualRlsvi {
    pub fn new(fmap: Arc<FeatureMap>, cfg: AgentConfig, mode: ContinualMode, seed: u64) -> Result<Self> {
        cfg.check_sigma_lambda()?;
        cfg.check_discount()?;
        if fmap.horizon() == 0 {
            return Err(Error::PeriodMismatch { features: 0, needed: 1 });
        }
        let k = fmap.num_features();
        Ok(Self {
            cfg,
            fmap,
            mode,
            rows: Vec::new(),
            rewards: Vec::new(),
            next_states: Vec::new(),
            gram: DMatrix::zeros(k, k),
            theta: DVector::zeros(k),
            w: DVector::zeros(k),
            rng: AgentRng::seed_from_u64(seed),
        })
    }

    /// `θ̂_t`.
    pub fn coefficients(&self) -> &DVector<f64> {
        &self.theta
    }

    /// `w_t`.
    pub fn perturbation(&self) -> &DVector<f64> {
        &self.w
    }

    pub fn steps(&self) -> usize {
        self.rows.len()
    }

    /// Greedy action on `Φθ̂_t`, ties broken uniformly.
    pub fn act(&mut self, state: usize) -> usize {
        let q = self.fmap.q_row(0, state, self.theta.as_slice());
        greedy_act(&q, &mut self.rng)
    }

    /// Absorbs one transition and produces `θ̂_{t+1}`.
    pub fn step(&mut self, t: Transition) -> Result<()> {
        let row = self.fmap.row(0, t.state, t.action);
        self.rows.push(row);
        self.rewards.push(t.reward);
        self.next_states.push(t.next);
        let k = self.fmap.num_features();
        let gram = match self.mode {
            ContinualMode::CachedGram => {
                let mut eq = NormalEquations { gram: std::mem::replace(&mut self.gram, DMatrix::zeros(0, 0)), moment: DVector::zeros(k) };
                eq.add_gram_row(self.rows.last().expect("row just pushed"));
                eq.gram
            }
            ContinualMode::FullRebuild => {
                let mut eq = NormalEquations::zeros(k);
                self.rows.iter().for_each(|r| eq.add_gram_row(r));
                eq.gram
            }
        };
        let mut normal = NormalEquations { gram, moment: DVector::zeros(k) };
        let gamma = self.cfg.discount;
        for (i, row) in self.rows.iter().enumerate() {
            let b = self.rewards[i] + gamma * self.fmap.max_q(0, self.next_states[i], self.theta.as_slice());
            normal.add_moment(row, b);
        }
        let post = posterior_from_normal_equations(&normal, self.cfg.sigma, self.cfg.lambda)?;
        self.gram = normal.gram;
        self.w = perturbation_step(&self.w, gamma, &post.covariance, &mut self.rng)?;
        self.theta = post.mean + &self.w;
        Ok(())
    }
}

/// Runs the agent for `steps` steps on the period-0 dynamics of `mdp`,
/// starting from a draw of its initial distribution. Returns the rewards.
pub fn run_continual<R: Rng + ?Sized>(
    mdp: &FiniteHorizonMdp,
    agent: &mut ContinualRlsvi,
    steps: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut state = mdp.sample_initial(rng);
    let mut rewards = Vec::with_capacity(steps);
    for _ in 0..steps {
        let action = agent.act(state);
        let (next, reward) = mdp.sample_transition(0, state, action, rng);
        agent.step(Transition { state, action, reward, next })?;
        rewards.push(reward);
        state = next;
    }
    Ok(rewards)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{Outcome, TransitionKernel};
    use crate::sampling::MeanEstimate;
    use rand_chacha::ChaCha8Rng;

    fn slope_and_se(xs: &[f64], ys: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let b = sxy / sxx;
        let a = my - b * mx;
        let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
        (b, (rss / (n - 2.0) / sxx).sqrt())
    }

    fn ar_path(gamma: f64, var: f64, steps: usize, seed: u64) -> Vec<f64> {
        let cov = DMatrix::from_element(1, 1, var);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = DVector::zeros(1);
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            w = perturbation_step(&w, gamma, &cov, &mut rng).unwrap();
            out.push(w[0]);
        }
        out
    }

    #[test]
    fn stationary_variance_fixed_point() {
        let path = ar_path(0.3, 2.0, 400_000, 1);
        // drop burn-in, then thin to roughly independent samples
        let sample: Vec<f64> = path[1000..].iter().step_by(50).copied().collect();
        let mut sq = MeanEstimate::default();
        sample.iter().for_each(|x| sq.push(x * x));
        assert!((sq.mean() - 2.0).abs() < 3.0 * sq.std_error(), "{} ± {}", sq.mean(), sq.std_error());
    }

    #[test]
    fn conditional_mean_slope() {
        for gamma in [0.5, 0.999] {
            let path = ar_path(gamma, 1.0, 200_000, 2);
            let (b, se) = slope_and_se(&path[..path.len() - 1], &path[1..]);
            let want = (1.0 - gamma * gamma).sqrt();
            assert!((b - want).abs() < 3.0 * se, "gamma {gamma}: {b} vs {want} (se {se})");
        }
    }

    fn two_state_loop() -> (FiniteHorizonMdp, Arc<FeatureMap>) {
        // action 1 moves to the other state; reward 1 for leaving state 1
        let rows = vec![
            vec![Outcome::new(0, 1.0, 0.0)],
            vec![Outcome::new(1, 1.0, 0.0)],
            vec![Outcome::new(1, 1.0, 0.0)],
            vec![Outcome::new(0, 1.0, 1.0)],
        ];
        let mdp = FiniteHorizonMdp::stationary(2, 2, 1, TransitionKernel::new(rows), vec![0.0; 2], vec![1.0, 0.0])
            .unwrap();
        (mdp, Arc::new(FeatureMap::identity(2, 2, 1)))
    }

    #[test]
    fn first_step_is_one_row_regression() {
        let (_, fmap) = two_state_loop();
        let cfg = AgentConfig { sigma: 1.0, lambda: 1.0, discount: 0.5, ..AgentConfig::default() };
        let mut means = MeanEstimate::default();
        for seed in 0..4000 {
            let mut agent = ContinualRlsvi::new(fmap.clone(), cfg.clone(), ContinualMode::FullRebuild, seed).unwrap();
            agent.step(Transition { state: 1, action: 1, reward: 1.0, next: 0 }).unwrap();
            // one observation of pair (1,1): mean 1/2, variance 1/2, w ~ N(0, γ²/2)
            means.push(agent.coefficients()[3]);
            assert_eq!(agent.coefficients()[0], agent.perturbation()[0]);
        }
        assert!((means.mean() - 0.5).abs() < 3.0 * means.std_error());
        assert!((means.variance() - 0.125).abs() < 0.01);
    }

    #[test]
    fn cached_gram_matches_full_rebuild() {
        let (mdp, fmap) = two_state_loop();
        let cfg = AgentConfig { sigma: 0.5, lambda: 1.0, discount: 0.8, ..AgentConfig::default() };
        let mut a = ContinualRlsvi::new(fmap.clone(), cfg.clone(), ContinualMode::FullRebuild, 3).unwrap();
        let mut b = ContinualRlsvi::new(fmap, cfg, ContinualMode::CachedGram, 3).unwrap();
        let ra = run_continual(&mdp, &mut a, 200, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let rb = run_continual(&mdp, &mut b, 200, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(ra, rb);
        assert!((a.coefficients() - b.coefficients()).abs().max() < 1e-10);
    }

    #[test]
    fn learns_to_cycle() {
        let (mdp, fmap) = two_state_loop();
        let cfg = AgentConfig { sigma: 0.1, lambda: 1.0, discount: 0.9, ..AgentConfig::default() };
        let mut agent = ContinualRlsvi::new(fmap, cfg, ContinualMode::CachedGram, 5).unwrap();
        let rewards = run_continual(&mdp, &mut agent, 400, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        let tail = rewards[300..].iter().sum::<f64>() / 100.0;
        assert!(tail > 0.4, "tail {tail}");
    }
}

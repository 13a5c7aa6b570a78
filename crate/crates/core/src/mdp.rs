//! Finite-horizon MDPs: model, exact backward induction, policy evaluation,
//! episode simulation and regret accounting.
//!
//! Periods are indexed `0..horizon`. A transition at period `h` moves the
//! system from `s_h` to `s_{h+1}` and yields a transition reward; after the
//! last transition a terminal reward is drawn from the law attached to
//! `s_H`. Transition laws are stored as sparse rows of [`Outcome`]s, one row
//! per `(s, a)` pair, so that large structured models (thousands of states
//! with two successors each) stay small in memory.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Tolerance for probability vectors summing to one.
pub const PROB_TOL: f64 = 1e-12;

/// One successor of a `(state, action)` pair with its expected transition reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub next: usize,
    pub prob: f64,
    pub reward: f64,
}

impl Outcome {
    pub fn new(next: usize, prob: f64, reward: f64) -> Self {
        Self { next, prob, reward }
    }
}

/// Transition and reward law for a single period, row `s * A + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    rows: Vec<Vec<Outcome>>,
}

impl TransitionKernel {
    pub fn new(rows: Vec<Vec<Outcome>>) -> Self {
        Self { rows }
    }

    pub fn row(&self, index: usize) -> &[Outcome] {
        &self.rows[index]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// How realized rewards scatter around their expected values.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RewardNoise {
    /// Realized reward equals the mean.
    #[default]
    Deterministic,
    /// Mean plus independent zero-mean Gaussian noise.
    Gaussian { std_dev: f64 },
}

impl RewardNoise {
    fn sample<R: Rng + ?Sized>(&self, mean: f64, rng: &mut R) -> f64 {
        match *self {
            RewardNoise::Deterministic => mean,
            RewardNoise::Gaussian { std_dev } => {
                let noise: f64 = Normal::new(0.0, std_dev)
                    .expect("validated at construction")
                    .sample(rng);
                mean + noise
            }
        }
    }
}

/// A finite-horizon MDP with exact access to its transition and reward laws.
///
/// Immutable after construction. Periods may share a kernel through `Arc`,
/// which is how time-homogeneous models avoid `H` copies.
#[derive(Debug, Clone)]
pub struct FiniteHorizonMdp {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    kernels: Vec<Arc<TransitionKernel>>,
    terminal_reward: Vec<f64>,
    initial: Vec<f64>,
    reward_noise: RewardNoise,
}

impl FiniteHorizonMdp {
    /// Builds and validates a model. `kernels` must hold one entry per period.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        kernels: Vec<Arc<TransitionKernel>>,
        terminal_reward: Vec<f64>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        let horizon = kernels.len();
        if num_states == 0 || num_actions == 0 {
            return Err(Error::InvalidModel("state and action sets must be nonempty".into()));
        }
        if horizon == 0 {
            return Err(Error::InvalidModel("horizon must be at least 1".into()));
        }
        if terminal_reward.len() != num_states {
            return Err(Error::InvalidModel(format!(
                "terminal reward has {} entries, expected {num_states}",
                terminal_reward.len()
            )));
        }
        if terminal_reward.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidModel("terminal reward must be finite".into()));
        }
        check_distribution(&initial, num_states, "initial distribution")?;
        for (h, kernel) in kernels.iter().enumerate() {
            if kernel.len() != num_states * num_actions {
                return Err(Error::InvalidModel(format!(
                    "period {h} kernel has {} rows, expected {}",
                    kernel.len(),
                    num_states * num_actions
                )));
            }
            for (idx, row) in kernel.rows.iter().enumerate() {
                let mut total = 0.0;
                for o in row {
                    if o.next >= num_states {
                        return Err(Error::InvalidModel(format!(
                            "period {h} row {idx}: successor {} out of range",
                            o.next
                        )));
                    }
                    if !(o.prob >= 0.0) || !o.reward.is_finite() {
                        return Err(Error::InvalidModel(format!(
                            "period {h} row {idx}: negative probability or non-finite reward"
                        )));
                    }
                    total += o.prob;
                }
                if (total - 1.0).abs() > PROB_TOL {
                    return Err(Error::InvalidModel(format!(
                        "period {h} row {idx} sums to {total}"
                    )));
                }
            }
        }
        Ok(Self {
            num_states,
            num_actions,
            horizon,
            kernels,
            terminal_reward,
            initial,
            reward_noise: RewardNoise::Deterministic,
        })
    }

    /// A model whose single kernel is reused at every period.
    pub fn stationary(
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        kernel: TransitionKernel,
        terminal_reward: Vec<f64>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        let shared = Arc::new(kernel);
        Self::new(
            num_states,
            num_actions,
            vec![shared; horizon],
            terminal_reward,
            initial,
        )
    }

    pub fn with_reward_noise(mut self, noise: RewardNoise) -> Result<Self> {
        if let RewardNoise::Gaussian { std_dev } = noise {
            if !(std_dev >= 0.0 && std_dev.is_finite()) {
                return Err(Error::InvalidModel("reward noise must be finite and >= 0".into()));
            }
        }
        self.reward_noise = noise;
        Ok(self)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial_distribution(&self) -> &[f64] {
        &self.initial
    }

    /// Expected terminal reward `E[R_H(s)]`.
    pub fn terminal_reward(&self) -> &[f64] {
        &self.terminal_reward
    }

    pub fn outcomes(&self, period: usize, state: usize, action: usize) -> &[Outcome] {
        self.kernels[period].row(state * self.num_actions + action)
    }

    /// Expected one-step reward `E[r_h | s, a]`.
    pub fn expected_reward(&self, period: usize, state: usize, action: usize) -> f64 {
        self.outcomes(period, state, action)
            .iter()
            .map(|o| o.prob * o.reward)
            .sum()
    }

    /// Probability of `next` given `(state, action)` at `period`.
    pub fn transition_prob(&self, period: usize, state: usize, action: usize, next: usize) -> f64 {
        self.outcomes(period, state, action)
            .iter()
            .filter(|o| o.next == next)
            .map(|o| o.prob)
            .sum()
    }

    /// Draws `s_0` from the initial distribution.
    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(self.initial.iter().copied(), rng)
    }

    /// Draws `(s', r)` for one transition.
    pub fn sample_transition<R: Rng + ?Sized>(
        &self,
        period: usize,
        state: usize,
        action: usize,
        rng: &mut R,
    ) -> (usize, f64) {
        let row = self.outcomes(period, state, action);
        let outcome = row[sample_index(row.iter().map(|o| o.prob), rng)];
        (outcome.next, self.reward_noise.sample(outcome.reward, rng))
    }
}

fn check_distribution(p: &[f64], len: usize, what: &str) -> Result<()> {
    if p.len() != len {
        return Err(Error::InvalidModel(format!("{what} has {} entries, expected {len}", p.len())));
    }
    if p.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::InvalidModel(format!("{what} has negative entries")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidModel(format!("{what} sums to {total}")));
    }
    Ok(())
}

// Inverse-CDF draw; the last index with positive mass absorbs roundoff.
fn sample_index<I, R>(probs: I, rng: &mut R) -> usize
where
    I: IntoIterator<Item = f64>,
    R: Rng + ?Sized,
{
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, p) in probs.into_iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// A deterministic Markov policy, `actions[h][s]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    actions: Vec<Vec<usize>>,
}

impl Policy {
    pub fn new(actions: Vec<Vec<usize>>) -> Self {
        Self { actions }
    }

    /// The policy playing `action` everywhere.
    pub fn constant(mdp: &FiniteHorizonMdp, action: usize) -> Self {
        Self::new(vec![vec![action; mdp.num_states()]; mdp.horizon()])
    }

    pub fn action(&self, period: usize, state: usize) -> usize {
        self.actions[period][state]
    }

    fn validate(&self, mdp: &FiniteHorizonMdp) -> Result<()> {
        if self.actions.len() != mdp.horizon()
            || self.actions.iter().any(|row| row.len() != mdp.num_states())
            || self.actions.iter().flatten().any(|&a| a >= mdp.num_actions())
        {
            return Err(Error::InvalidArgument("policy does not match the model".into()));
        }
        Ok(())
    }
}

/// Optimal action-value and state-value functions.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunctions {
    num_actions: usize,
    /// `q_star[h][s * A + a]` for `h < H`.
    pub q_star: Vec<Vec<f64>>,
    /// `v_star[h][s]` for `h <= H`; `v_star[H]` is the expected terminal reward.
    pub v_star: Vec<Vec<f64>>,
}

impl ValueFunctions {
    pub fn new(num_actions: usize, q_star: Vec<Vec<f64>>, v_star: Vec<Vec<f64>>) -> Self {
        Self { num_actions, q_star, v_star }
    }

    pub fn q(&self, period: usize, state: usize, action: usize) -> f64 {
        self.q_star[period][state * self.num_actions + action]
    }

    pub fn v(&self, period: usize, state: usize) -> f64 {
        self.v_star[period][state]
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.q_star.len()
    }

    /// Greedy policy with respect to `q_star`, lowest action index on ties.
    pub fn greedy_policy(&self) -> Policy {
        let a = self.num_actions;
        Policy::new(
            self.q_star
                .iter()
                .map(|q| q.chunks(a).map(argmax_lowest).collect())
                .collect(),
        )
    }
}

/// Index of the first maximal entry.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Backward induction on expected rewards.
pub fn solve_optimal(mdp: &FiniteHorizonMdp) -> ValueFunctions {
    let (s_count, a_count, horizon) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
    let mut v_star = vec![Vec::new(); horizon + 1];
    let mut q_star = vec![Vec::new(); horizon];
    v_star[horizon] = mdp.terminal_reward().to_vec();
    for h in (0..horizon).rev() {
        let next = &v_star[h + 1];
        let mut q = vec![0.0; s_count * a_count];
        let mut v = vec![0.0; s_count];
        for s in 0..s_count {
            for a in 0..a_count {
                q[s * a_count + a] = mdp
                    .outcomes(h, s, a)
                    .iter()
                    .map(|o| o.prob * (o.reward + next[o.next]))
                    .sum();
            }
            v[s] = q[s * a_count..(s + 1) * a_count]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
        }
        q_star[h] = q;
        v_star[h] = v;
    }
    ValueFunctions { num_actions: a_count, q_star, v_star }
}

/// Exact value `V^μ_h(s)` for `h <= H` of a deterministic policy.
pub fn evaluate_policy(mdp: &FiniteHorizonMdp, policy: &Policy) -> Result<Vec<Vec<f64>>> {
    policy.validate(mdp)?;
    Ok(evaluate_with(mdp, |h, s| policy.action(h, s)))
}

pub(crate) fn evaluate_with<F>(mdp: &FiniteHorizonMdp, mut choose: F) -> Vec<Vec<f64>>
where
    F: FnMut(usize, usize) -> usize,
{
    let horizon = mdp.horizon();
    let mut values = vec![Vec::new(); horizon + 1];
    values[horizon] = mdp.terminal_reward().to_vec();
    for h in (0..horizon).rev() {
        let next = &values[h + 1];
        let current = (0..mdp.num_states())
            .map(|s| {
                mdp.outcomes(h, s, choose(h, s))
                    .iter()
                    .map(|o| o.prob * (o.reward + next[o.next]))
                    .sum()
            })
            .collect();
        values[h] = current;
    }
    values
}

/// One episode's trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    /// `s_0, ..., s_H`.
    pub states: Vec<usize>,
    /// `a_0, ..., a_{H-1}`.
    pub actions: Vec<usize>,
    /// Transition rewards `r_0, ..., r_{H-1}`.
    pub rewards: Vec<f64>,
    /// `r_H`.
    pub terminal_reward: f64,
}

impl EpisodeLog {
    pub fn horizon(&self) -> usize {
        self.actions.len()
    }

    pub fn episode_reward(&self) -> f64 {
        self.rewards.iter().sum::<f64>() + self.terminal_reward
    }
}

/// Decision-making hooks used by [`simulate_episode`].
pub trait Agent {
    /// Called once before `s_0` is drawn.
    fn begin_episode(&mut self) {}

    fn act(&mut self, period: usize, state: usize) -> usize;

    /// Called after every transition with the partial log.
    fn observe(&mut self, _partial: &EpisodeLog) {}

    /// Called with the complete log, terminal reward included.
    fn end_episode(&mut self, log: &EpisodeLog);
}

/// Runs one episode. Transition and reward randomness come from `rng`;
/// the agent owns whatever randomness it uses.
///
/// Panics if the agent returns an out-of-range action.
pub fn simulate_episode<A, R>(mdp: &FiniteHorizonMdp, agent: &mut A, rng: &mut R) -> EpisodeLog
where
    A: Agent + ?Sized,
    R: Rng + ?Sized,
{
    let horizon = mdp.horizon();
    agent.begin_episode();
    let mut log = EpisodeLog {
        states: Vec::with_capacity(horizon + 1),
        actions: Vec::with_capacity(horizon),
        rewards: Vec::with_capacity(horizon),
        terminal_reward: 0.0,
    };
    let mut state = mdp.sample_initial(rng);
    log.states.push(state);
    for h in 0..horizon {
        let action = agent.act(h, state);
        assert!(
            action < mdp.num_actions(),
            "agent returned action {action} with only {} actions",
            mdp.num_actions()
        );
        let (next, reward) = mdp.sample_transition(h, state, action, rng);
        state = next;
        log.actions.push(action);
        log.rewards.push(reward);
        log.states.push(state);
        agent.observe(&log);
    }
    log.terminal_reward = mdp
        .reward_noise
        .sample(mdp.terminal_reward()[state], rng);
    agent.end_episode(&log);
    log
}

/// `V*_0(s_0) - episode reward`.
pub fn regret_of_episode(v_star_0: &[f64], log: &EpisodeLog) -> f64 {
    v_star_0[log.states[0]] - log.episode_reward()
}

/// An agent that follows a fixed deterministic policy.
#[derive(Debug, Clone)]
pub struct PolicyAgent {
    policy: Policy,
}

impl PolicyAgent {
    pub fn new(policy: Policy) -> Self {
        Self { policy }
    }
}

impl Agent for PolicyAgent {
    fn act(&mut self, period: usize, state: usize) -> usize {
        self.policy.action(period, state)
    }

    fn end_episode(&mut self, _log: &EpisodeLog) {}
}

/// Uniformly random actions from an owned generator.
#[derive(Debug, Clone)]
pub struct UniformAgent<R> {
    num_actions: usize,
    rng: R,
}

impl<R: Rng> UniformAgent<R> {
    pub fn new(num_actions: usize, rng: R) -> Self {
        Self { num_actions, rng }
    }
}

impl<R: Rng> Agent for UniformAgent<R> {
    fn act(&mut self, _period: usize, _state: usize) -> usize {
        self.rng.random_range(0..self.num_actions)
    }

    fn end_episode(&mut self, _log: &EpisodeLog) {}
}

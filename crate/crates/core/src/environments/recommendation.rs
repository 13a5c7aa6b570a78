//! Sequential recommendation with logistic, history-dependent preferences.
//!
//! A state is a vector `x ∈ {-1, 0, +1}^N`: 0 for unseen products, ±1 for
//! disliked/liked. Recommending a fresh product `a` flips `x_a` to +1 with
//! probability `P(a|x)` (reward 1) and to -1 otherwise (reward 0).
//! Recommending an already-seen product is a zero-reward self-loop, which
//! keeps the action set fixed at `N` without changing optimal values.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::mdp::{FiniteHorizonMdp, Outcome, TransitionKernel};

/// A recommendation MDP together with its state encoding.
#[derive(Debug, Clone)]
pub struct RecommendationEnv {
    num_products: usize,
    num_recommendations: usize,
    /// Row-major `gamma[a * N + n]`.
    gamma: Vec<f64>,
    beta: Vec<f64>,
    states: Vec<Vec<i8>>,
    index: HashMap<u64, usize>,
    /// `level_offsets[k]` is the first state with `k` nonzero entries.
    level_offsets: Vec<usize>,
    mdp: FiniteHorizonMdp,
}

fn ternary_key(x: &[i8]) -> u64 {
    x.iter().rev().fold(0u64, |acc, &v| acc * 3 + (v + 1) as u64)
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

// All k-subsets of 0..n in lexicographic order.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Builds the MDP over all preference vectors with at most `J` observed products.
///
/// `gamma` is row-major `N × N` (`gamma[a * N + n]`). Horizon is `J`.
pub fn make_recommendation(
    num_products: usize,
    num_recommendations: usize,
    gamma: &[f64],
    beta: &[f64],
) -> Result<RecommendationEnv> {
    let n = num_products;
    let j = num_recommendations;
    if n == 0 || j == 0 {
        return Err(Error::InvalidArgument("need N >= 1 and J >= 1".into()));
    }
    if j > n {
        return Err(Error::InvalidArgument(format!("J = {j} exceeds N = {n}")));
    }
    if n > 30 {
        return Err(Error::InvalidArgument("N > 30 cannot be encoded".into()));
    }
    if gamma.len() != n * n || beta.len() != n {
        return Err(Error::InvalidArgument("gamma must be N×N and beta length N".into()));
    }
    if gamma.iter().chain(beta).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("gamma and beta must be finite".into()));
    }

    let mut states: Vec<Vec<i8>> = Vec::new();
    let mut level_offsets = Vec::with_capacity(j + 2);
    for k in 0..=j {
        level_offsets.push(states.len());
        let mut level: Vec<Vec<i8>> = Vec::new();
        for subset in subsets(n, k) {
            for signs in 0..(1u32 << k) {
                let mut x = vec![0i8; n];
                for (bit, &p) in subset.iter().enumerate() {
                    x[p] = if signs >> bit & 1 == 1 { 1 } else { -1 };
                }
                level.push(x);
            }
        }
        level.sort_by_key(|x| ternary_key(x));
        states.extend(level);
    }
    level_offsets.push(states.len());
    let index: HashMap<u64, usize> = states
        .iter()
        .enumerate()
        .map(|(i, x)| (ternary_key(x), i))
        .collect();

    let mut env = RecommendationEnv {
        num_products: n,
        num_recommendations: j,
        gamma: gamma.to_vec(),
        beta: beta.to_vec(),
        states,
        index,
        level_offsets,
        mdp: placeholder_mdp(),
    };

    let mut rows = Vec::with_capacity(env.states.len() * n);
    for (s, x) in env.states.iter().enumerate() {
        let observed = x.iter().filter(|v| **v != 0).count();
        for a in 0..n {
            if x[a] != 0 || observed == j {
                rows.push(vec![Outcome::new(s, 1.0, 0.0)]);
                continue;
            }
            let p = env.like_probability(x, a);
            let mut liked = x.clone();
            liked[a] = 1;
            let mut disliked = x.clone();
            disliked[a] = -1;
            rows.push(vec![
                Outcome::new(env.index[&ternary_key(&liked)], p, 1.0),
                Outcome::new(env.index[&ternary_key(&disliked)], 1.0 - p, 0.0),
            ]);
        }
    }
    let count = env.states.len();
    let mut initial = vec![0.0; count];
    initial[0] = 1.0;
    env.mdp = FiniteHorizonMdp::stationary(
        count,
        n,
        j,
        TransitionKernel::new(rows),
        vec![0.0; count],
        initial,
    )?;
    Ok(env)
}

fn placeholder_mdp() -> FiniteHorizonMdp {
    FiniteHorizonMdp::stationary(
        1,
        1,
        1,
        TransitionKernel::new(vec![vec![Outcome::new(0, 1.0, 0.0)]]),
        vec![0.0],
        vec![1.0],
    )
    .expect("trivial model is valid")
}

impl RecommendationEnv {
    pub fn mdp(&self) -> &FiniteHorizonMdp {
        &self.mdp
    }

    pub fn num_products(&self) -> usize {
        self.num_products
    }

    pub fn num_recommendations(&self) -> usize {
        self.num_recommendations
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Preference vector of a state index.
    pub fn state_vector(&self, state: usize) -> &[i8] {
        &self.states[state]
    }

    pub fn state_index(&self, x: &[i8]) -> Option<usize> {
        if x.len() != self.num_products {
            return None;
        }
        self.index.get(&ternary_key(x)).copied()
    }

    /// Number of states with exactly `k` observed products.
    pub fn states_with_observed(&self, k: usize) -> usize {
        if k > self.num_recommendations {
            0
        } else {
            self.level_offsets[k + 1] - self.level_offsets[k]
        }
    }

    /// States reachable at periods `0..J` by recommending fresh products.
    pub fn decision_state_count(&self) -> usize {
        self.level_offsets[self.num_recommendations]
    }

    /// `P(a | x) = logistic(β_a + Σ_n γ_an x_n)`.
    pub fn like_probability(&self, x: &[i8], a: usize) -> f64 {
        let n = self.num_products;
        let logit = self.beta[a]
            + self.gamma[a * n..(a + 1) * n]
                .iter()
                .zip(x)
                .map(|(g, &xn)| g * xn as f64)
                .sum::<f64>();
        logistic(logit)
    }
}

/// `β = 0` and `γ_an ~ N(0, c²)` i.i.d.; returns `(gamma, beta)` with gamma row-major.
pub fn sample_recommendation_instance<R: Rng + ?Sized>(
    num_products: usize,
    scale: f64,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale must be finite and >= 0, got {scale}")));
    }
    let normal = Normal::new(0.0, scale).expect("validated scale");
    let gamma = (0..num_products * num_products)
        .map(|_| normal.sample(rng))
        .collect();
    Ok((gamma, vec![0.0; num_products]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::solve_optimal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn paper_instance_has_4521_decision_states() {
        let n = 10;
        let env = make_recommendation(n, 5, &vec![0.0; n * n], &vec![0.0; n]).unwrap();
        assert_eq!(env.decision_state_count(), 4521);
    }

    #[test]
    fn level_counts_match_formula() {
        for n in 1..=6 {
            for j in 1..=n.min(4) {
                let env = make_recommendation(n, j, &vec![0.0; n * n], &vec![0.0; n]).unwrap();
                for k in 0..=j {
                    assert_eq!(env.states_with_observed(k), binom(n, k) << k);
                }
            }
        }
    }

    #[test]
    fn zero_logits_give_half() {
        let n = 4;
        let env = make_recommendation(n, 3, &vec![0.0; n * n], &vec![0.0; n]).unwrap();
        let vf = solve_optimal(env.mdp());
        assert!((vf.v(0, 0) - 1.5).abs() < 1e-12);
        assert_eq!(env.like_probability(&[0, 1, -1, 0], 3), 0.5);
    }

    #[test]
    fn two_products_one_pick() {
        let env = make_recommendation(2, 1, &[0.0; 4], &[1.0, 0.0]).unwrap();
        let vf = solve_optimal(env.mdp());
        let p = std::f64::consts::E / (1.0 + std::f64::consts::E);
        assert_eq!(vf.greedy_policy().action(0, 0), 0);
        assert!((vf.v(0, 0) - p).abs() < 1e-12);
    }

    #[test]
    fn rejects_too_many_recommendations() {
        assert!(make_recommendation(2, 3, &[0.0; 4], &[0.0; 2]).is_err());
    }

    #[test]
    fn stale_recommendation_is_self_loop() {
        let env = make_recommendation(3, 2, &[0.5; 9], &[0.0; 3]).unwrap();
        let s = env.state_index(&[0, 1, 0]).unwrap();
        let out = env.mdp().outcomes(1, s, 1);
        assert_eq!(out, &[Outcome::new(s, 1.0, 0.0)]);
    }

    #[test]
    fn instance_sampling() {
        let (g, b) = sample_recommendation_instance(10, 0.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(g.iter().all(|v| *v == 0.0) && b.iter().all(|v| *v == 0.0));
        let a = sample_recommendation_instance(10, 2.0, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = sample_recommendation_instance(10, 2.0, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.0.len(), 100);
    }
}

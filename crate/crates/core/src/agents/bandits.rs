use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_distr::{Beta, Distribution};

use crate::agents::AgentRng;
use crate::environments::RecommendationEnv;
use crate::error::{Error, Result};
use crate::mdp::{Agent, EpisodeLog};

/// Draws `p̂_n ~ Beta(α_n, β_n)` per product and returns the `count`
/// products with the largest draws, best first.
pub fn bernoulli_ts_act<R: Rng + ?Sized>(
    alpha: &[f64],
    beta: &[f64],
    count: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut draws: Vec<(f64, usize)> = alpha
        .iter()
        .zip(beta)
        .enumerate()
        .map(|(n, (&a, &b))| (Beta::new(a, b).expect("Beta parameters >= 1").sample(rng), n))
        .collect();
    draws.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    draws.into_iter().take(count).map(|(_, n)| n).collect()
}

/// Context-free Thompson sampling over products with independent Beta(1, 1)
/// priors. One ranking is drawn per episode and followed in order.
#[derive(Debug, Clone)]
pub struct BernoulliTs {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    count: usize,
    ranking: Vec<usize>,
    rng: AgentRng,
}

impl BernoulliTs {
    pub fn new(num_products: usize, num_recommendations: usize, seed: u64) -> Result<Self> {
        if num_recommendations == 0 || num_recommendations > num_products {
            return Err(Error::InvalidArgument(format!(
                "cannot recommend {num_recommendations} of {num_products} products"
            )));
        }
        Ok(Self {
            alpha: vec![1.0; num_products],
            beta: vec![1.0; num_products],
            count: num_recommendations,
            ranking: Vec::new(),
            rng: AgentRng::seed_from_u64(seed),
        })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// `α_n += 1` on a like, `β_n += 1` otherwise.
    pub fn update(&mut self, product: usize, liked: bool) {
        if liked {
            self.alpha[product] += 1.0;
        } else {
            self.beta[product] += 1.0;
        }
    }
}

impl Agent for BernoulliTs {
    fn begin_episode(&mut self) {
        self.ranking = bernoulli_ts_act(&self.alpha, &self.beta, self.count, &mut self.rng);
    }

    fn act(&mut self, period: usize, _state: usize) -> usize {
        self.ranking[period]
    }

    fn end_episode(&mut self, log: &EpisodeLog) {
        for (&a, &r) in log.actions.iter().zip(&log.rewards) {
            self.update(a, r > 0.0);
        }
    }
}

/// Fresh product with the largest true like-probability, lowest index on ties.
/// Falls back to product 0 when every product has been seen.
pub fn oracle_myopic_act(env: &RecommendationEnv, state: usize) -> usize {
    let x = env.state_vector(state);
    let mut best: Option<(usize, f64)> = None;
    for a in (0..env.num_products()).filter(|&a| x[a] == 0) {
        let p = env.like_probability(x, a);
        if best.is_none_or(|(_, bp)| p > bp) {
            best = Some((a, p));
        }
    }
    best.map_or(0, |(a, _)| a)
}

/// Greedy on the true one-step like-probability.
#[derive(Debug, Clone)]
pub struct MyopicOracle {
    env: Arc<RecommendationEnv>,
}

impl MyopicOracle {
    pub fn new(env: Arc<RecommendationEnv>) -> Self {
        Self { env }
    }
}

impl Agent for MyopicOracle {
    fn act(&mut self, _period: usize, state: usize) -> usize {
        oracle_myopic_act(&self.env, state)
    }

    fn end_episode(&mut self, _log: &EpisodeLog) {}
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{make_recommendation, sample_recommendation_instance};
    use crate::mdp::simulate_episode;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fresh_priors_rank_uniformly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let mut counts = [0usize; 10];
        for _ in 0..n {
            counts[bernoulli_ts_act(&[1.0; 10], &[1.0; 10], 3, &mut rng)[0]] += 1;
        }
        let se = (0.1f64 * 0.9 / n as f64).sqrt();
        for c in counts {
            assert!((c as f64 / n as f64 - 0.1).abs() <= 3.0 * se);
        }
    }

    #[test]
    fn concentrated_product_ranks_first() {
        // P(first) = E[Y^(N-1)] = 100 / (100 + N - 1) for Y ~ Beta(100, 1)
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draws = 20_000;
        for n in [5usize, 10] {
            let mut alpha = vec![1.0; n];
            alpha[n / 2] = 100.0;
            let hits = (0..draws)
                .filter(|_| bernoulli_ts_act(&alpha, &vec![1.0; n], 3, &mut rng)[0] == n / 2)
                .count();
            let freq = hits as f64 / draws as f64;
            let p = 100.0 / (99.0 + n as f64);
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((freq - p).abs() <= 3.0 * se, "n={n}: {freq} vs {p}");
            if n == 5 {
                assert!(freq >= 0.95);
            }
        }
    }

    #[test]
    fn ranking_is_distinct() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = bernoulli_ts_act(&[2.0, 1.0, 5.0, 1.0], &[1.0, 3.0, 1.0, 1.0], 4, &mut rng);
        let mut sorted = r.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
    }

    #[test]
    fn liked_update_touches_one_alpha() {
        let mut ts = BernoulliTs::new(5, 2, 0).unwrap();
        ts.update(3, true);
        assert_eq!(ts.alpha(), &[1.0, 1.0, 1.0, 2.0, 1.0]);
        assert!(ts.beta().iter().all(|b| *b == 1.0));
    }

    #[test]
    fn counts_match_recommendations() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (gamma, beta) = sample_recommendation_instance(5, 2.0, &mut rng).unwrap();
        let env = make_recommendation(5, 3, &gamma, &beta).unwrap();
        let mut ts = BernoulliTs::new(5, 3, 5).unwrap();
        let mut shown = [0usize; 5];
        for _ in 0..100 {
            let log = simulate_episode(env.mdp(), &mut ts, &mut rng);
            log.actions.iter().for_each(|&a| shown[a] += 1);
        }
        for n in 0..5 {
            assert_eq!(ts.alpha()[n] + ts.beta()[n] - 2.0, shown[n] as f64);
        }
    }

    #[test]
    fn myopic_dominant_logit_and_ties() {
        let n = 4;
        let mut beta = vec![0.0; n];
        beta[0] = 1.0;
        let env = make_recommendation(n, 2, &vec![0.0; n * n], &beta).unwrap();
        assert_eq!(oracle_myopic_act(&env, 0), 0);
        let flat = make_recommendation(n, 2, &vec![0.0; n * n], &vec![0.5; n]).unwrap();
        assert_eq!(oracle_myopic_act(&flat, 0), 0);
    }

    #[test]
    fn myopic_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (gamma, beta) = sample_recommendation_instance(3, 2.0, &mut rng).unwrap();
        let env = make_recommendation(3, 2, &gamma, &beta).unwrap();
        for s in 0..env.decision_state_count() {
            let x = env.state_vector(s);
            let logit = |a: usize| (0..3).map(|m| gamma[a * 3 + m] * x[m] as f64).sum::<f64>() + beta[a];
            let fresh: Vec<usize> = (0..3).filter(|&a| x[a] == 0).collect();
            let want = fresh
                .iter()
                .copied()
                .fold(fresh[0], |b, a| if logit(a) > logit(b) { a } else { b });
            assert_eq!(oracle_myopic_act(&env, s), want, "state {x:?}");
        }
    }
}

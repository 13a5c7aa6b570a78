//! Action selection from a row of estimated Q-values.

use rand::Rng;

use crate::features::FeatureMap;

/// Uniformly random maximizer.
pub fn greedy_act<R: Rng + ?Sized>(q: &[f64], rng: &mut R) -> usize {
    let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..q.len()).filter(|&a| q[a] == best).collect();
    match ties.len() {
        0 => rng.random_range(0..q.len()),
        1 => ties[0],
        n => ties[rng.random_range(0..n)],
    }
}

/// Softmax draw with probabilities proportional to `exp(q / η)`.
pub fn boltzmann_act<R: Rng + ?Sized>(q: &[f64], eta: f64, rng: &mut R) -> usize {
    let weights = boltzmann_probabilities(q, eta);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (a, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return a;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// Log-sum-exp stabilized softmax.
pub fn boltzmann_probabilities(q: &[f64], eta: f64) -> Vec<f64> {
    let top = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = q.iter().map(|v| ((v - top) / eta).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// Uniform with probability `ε`, otherwise [`greedy_act`].
pub fn epsilon_greedy_act<R: Rng + ?Sized>(q: &[f64], epsilon: f64, rng: &mut R) -> usize {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        rng.random_range(0..q.len())
    } else {
        greedy_act(q, rng)
    }
}

/// How a value-based agent turns estimates into actions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exploration {
    Greedy,
    Boltzmann { eta: f64 },
    EpsilonGreedy { epsilon: f64 },
}

impl Exploration {
    pub fn choose<R: Rng + ?Sized>(&self, q: &[f64], rng: &mut R) -> usize {
        match *self {
            Exploration::Greedy => greedy_act(q, rng),
            Exploration::Boltzmann { eta } => boltzmann_act(q, eta, rng),
            Exploration::EpsilonGreedy { epsilon } => epsilon_greedy_act(q, epsilon, rng),
        }
    }

    /// Picks an action at `(h, s)` from coefficients `theta`.
    pub fn act<R: Rng + ?Sized>(
        &self,
        theta: &[f64],
        fmap: &FeatureMap,
        period: usize,
        state: usize,
        rng: &mut R,
    ) -> usize {
        self.choose(&fmap.q_row(period, state, theta), rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frequencies(n: usize, actions: usize, mut pick: impl FnMut() -> usize) -> Vec<f64> {
        let mut counts = vec![0usize; actions];
        for _ in 0..n {
            counts[pick()] += 1;
        }
        counts.iter().map(|c| *c as f64 / n as f64).collect()
    }

    fn within_3se(freq: f64, p: f64, n: usize) {
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() <= 3.0 * se, "freq {freq} vs {p}");
    }

    #[test]
    fn full_tie_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let f = frequencies(n, 4, || greedy_act(&[0.3; 4], &mut rng));
        f.iter().for_each(|x| within_3se(*x, 0.25, n));
    }

    #[test]
    fn unique_max_always_chosen() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            assert_eq!(greedy_act(&[0.1, 0.9, 0.5], &mut rng), 1);
        }
    }

    #[test]
    fn positive_scaling_preserves_selection() {
        let mut gen = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let q: Vec<f64> = (0..5).map(|_| (gen.random::<f64>() * 4.0).floor()).collect();
            let c = 0.1 + gen.random::<f64>() * 10.0;
            let scaled: Vec<f64> = q.iter().map(|v| v * c).collect();
            let seed = gen.random::<u64>();
            let a = greedy_act(&q, &mut ChaCha8Rng::seed_from_u64(seed));
            let b = greedy_act(&scaled, &mut ChaCha8Rng::seed_from_u64(seed));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn boltzmann_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 100_000;
        let f = frequencies(n, 3, || boltzmann_act(&[2.0; 3], 0.5, &mut rng));
        f.iter().for_each(|x| within_3se(*x, 1.0 / 3.0, n));

        let p = boltzmann_probabilities(&[1.0, 0.0], 1e-8);
        assert!(p[0] >= 1.0 - 1e-6);

        let e = std::f64::consts::E;
        let f = frequencies(n, 2, || boltzmann_act(&[1.0, 0.0], 1.0, &mut rng));
        within_3se(f[0], e / (1.0 + e), n);
    }

    #[test]
    fn epsilon_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let f = frequencies(n, 3, || epsilon_greedy_act(&[5.0, 0.0, 0.0], 1.0, &mut rng));
        f.iter().for_each(|x| within_3se(*x, 1.0 / 3.0, n));

        let f = frequencies(n, 2, || epsilon_greedy_act(&[1.0, 0.0], 0.5, &mut rng));
        within_3se(f[0], 0.75, n);

        for seed in 0..50 {
            let q = [0.2, 0.7, 0.7, 0.1];
            let a = epsilon_greedy_act(&q, 0.0, &mut ChaCha8Rng::seed_from_u64(seed));
            let b = greedy_act(&q, &mut ChaCha8Rng::seed_from_u64(seed));
            assert_eq!(a, b);
        }
    }
}

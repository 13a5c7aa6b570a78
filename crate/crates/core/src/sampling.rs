//! Small random-variate helpers shared by environments and the optimism checks.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

/// Dirichlet draw as normalized unit-scale Gamma variates.
pub fn sample_dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    let mut draws: Vec<f64> = alpha
        .iter()
        .map(|&a| {
            Gamma::new(a, 1.0)
                .expect("Dirichlet concentration must be positive and finite")
                .sample(rng)
        })
        .collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 {
        for d in &mut draws {
            *d /= total;
        }
    } else {
        // Every Gamma draw underflowed; only reachable for tiny concentrations.
        let n = draws.len() as f64;
        draws.iter_mut().for_each(|d| *d = 1.0 / n);
    }
    draws
}

/// Running mean and standard error of a scalar stream.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanEstimate {
    count: u64,
    mean: f64,
    m2: f64,
}

impl MeanEstimate {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for MeanEstimate {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut est = MeanEstimate::default();
        for x in iter {
            est.push(x);
        }
        est
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dirichlet_on_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let p = sample_dirichlet(&[1.0, 2.5, 0.3], &mut rng);
            assert!(p.iter().all(|x| *x >= 0.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let alpha = [1.0, 2.0, 3.0];
        let est: MeanEstimate = (0..50_000).map(|_| sample_dirichlet(&alpha, &mut rng)[2]).collect();
        assert!((est.mean() - 0.5).abs() < 3.0 * est.std_error());
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, 2.0, 8.0, 5.0];
        let est: MeanEstimate = xs.iter().copied().collect();
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((est.mean() - mean).abs() < 1e-12);
        assert!((est.variance() - var).abs() < 1e-12);
    }
}

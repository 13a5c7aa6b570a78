use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::mdp::{FiniteHorizonMdp, Outcome, TransitionKernel};
use crate::sampling::sample_dirichlet;

/// Random tabular MDP: transition rows i.i.d. uniform on the simplex, zero
/// transition rewards, terminal rewards in `[-0.5, 0.5]` summing to zero.
/// Episodes start uniformly at random.
pub fn sample_dirichlet_mdp<R: Rng + ?Sized>(
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    rng: &mut R,
) -> Result<FiniteHorizonMdp> {
    if num_states < 2 || num_actions == 0 || horizon == 0 {
        return Err(Error::InvalidArgument("need S >= 2, A >= 1, H >= 1".into()));
    }
    let ones = vec![1.0; num_states];
    let kernels = (0..horizon)
        .map(|_| {
            let rows = (0..num_states * num_actions)
                .map(|_| {
                    sample_dirichlet(&ones, rng)
                        .into_iter()
                        .enumerate()
                        .map(|(next, p)| Outcome::new(next, p, 0.0))
                        .collect()
                })
                .collect();
            Arc::new(TransitionKernel::new(rows))
        })
        .collect();
    let terminal = centered_terminal_rewards(num_states, rng);
    let initial = vec![1.0 / num_states as f64; num_states];
    FiniteHorizonMdp::new(num_states, num_actions, kernels, terminal, initial)
}

/// Uniform draws on `[-0.5, 0.5]`, recentered to sum to zero and rescaled
/// into the interval if recentering pushed any value outside.
pub fn centered_terminal_rewards<R: Rng + ?Sized>(num_states: usize, rng: &mut R) -> Vec<f64> {
    let mut r: Vec<f64> = (0..num_states).map(|_| rng.random::<f64>() - 0.5).collect();
    let mean = r.iter().sum::<f64>() / num_states as f64;
    r.iter_mut().for_each(|v| *v -= mean);
    let peak = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.5 {
        let scale = 2.0 * peak;
        r.iter_mut().for_each(|v| *v /= scale);
    }
    r
}

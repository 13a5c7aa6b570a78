use crate::error::{Error, Result};
use crate::mdp::{FiniteHorizonMdp, Outcome, TransitionKernel};

/// Action index of `a^(1)`: step left, clamped at 0.
pub const LEFT: usize = 0;
/// Action index of `a^(2)`: step right.
pub const RIGHT: usize = 1;

/// Deterministic chain with `n` states and horizon `n`.
///
/// States `0..n-1` are red; `n-1` is the absorbing green state. Transitions
/// out of red states pay 0, transitions out of green pay 1 under either
/// action. No terminal reward; every episode starts at state 0.
pub fn make_chain(n: usize) -> Result<FiniteHorizonMdp> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("chain needs at least 2 states, got {n}")));
    }
    let green = n - 1;
    let mut rows = Vec::with_capacity(2 * n);
    for s in 0..n {
        if s == green {
            rows.push(vec![Outcome::new(green, 1.0, 1.0)]);
            rows.push(vec![Outcome::new(green, 1.0, 1.0)]);
        } else {
            rows.push(vec![Outcome::new(s.saturating_sub(1), 1.0, 0.0)]);
            rows.push(vec![Outcome::new(s + 1, 1.0, 0.0)]);
        }
    }
    let mut initial = vec![0.0; n];
    initial[0] = 1.0;
    FiniteHorizonMdp::stationary(n, 2, n, TransitionKernel::new(rows), vec![0.0; n], initial)
}

/// Regret lower bound for dithering exploration on the `num_states` chain:
/// `(2^{S-1} - 1) * (1 - (1 - 2^{-(S-1)})^{T/H})`.
pub fn chain_regret_lower_bound(num_states: u32, steps: u64, horizon: u64) -> Result<f64> {
    if num_states < 1 || horizon == 0 || !steps.is_multiple_of(horizon) {
        return Err(Error::InvalidArgument(
            "lower bound needs S >= 1, H >= 1 and T a multiple of H".into(),
        ));
    }
    let episodes = (steps / horizon) as f64;
    let success = 0.5f64.powi(num_states as i32 - 1);
    let miss_all = (episodes * (-success).ln_1p()).exp();
    Ok((2f64.powi(num_states as i32 - 1) - 1.0) * (1.0 - miss_all))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{evaluate_policy, solve_optimal, Policy};

    #[test]
    fn optimal_value_is_one() {
        for n in [2, 5, 50] {
            let mdp = make_chain(n).unwrap();
            let vf = solve_optimal(&mdp);
            assert_eq!(vf.v(0, 0), 1.0);
            let policy = vf.greedy_policy();
            // along the optimal path the right action is strictly better
            for h in 0..n - 1 {
                assert_eq!(policy.action(h, h), RIGHT);
                assert!(vf.q(h, h, RIGHT) > vf.q(h, h, LEFT));
            }
        }
    }

    #[test]
    fn always_left_earns_nothing() {
        let mdp = make_chain(50).unwrap();
        let v = evaluate_policy(&mdp, &Policy::constant(&mdp, LEFT)).unwrap();
        assert_eq!(v[0][0], 0.0);
    }

    #[test]
    fn small_chain_rejected() {
        assert!(make_chain(1).is_err());
        assert!(make_chain(0).is_err());
    }

    #[test]
    fn lower_bound_values() {
        assert!((chain_regret_lower_bound(2, 2, 2).unwrap() - 0.5).abs() < 1e-15);
        let expect = 31.0 * (1.0 - (31.0f64 / 32.0).powi(320));
        assert!((chain_regret_lower_bound(6, 320 * 6, 6).unwrap() - expect).abs() < 1e-10);
        let limit = 2f64.powi(49) - 1.0;
        let far = chain_regret_lower_bound(50, 50 * (1u64 << 58), 50).unwrap();
        assert!((far - limit).abs() / limit < 1e-9);
        assert!(chain_regret_lower_bound(6, 7, 6).is_err());
    }
}

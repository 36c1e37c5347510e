//! Generalized advantage estimation.

use super::net::LearnError;

/// Computes GAE advantages and returns.
///
/// `values` carries one bootstrap entry beyond `rewards`: `values[t]` is
/// V(s_t) and `values[T]` the bootstrap for a batch cut mid-episode (zero
/// when the final step terminated). `dones[t]` marks episode boundaries;
/// no value flows across them.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>), LearnError> {
    if values.len() != rewards.len() + 1 || dones.len() != rewards.len() {
        return Err(LearnError::LengthMismatch);
    }
    let n = rewards.len();
    let mut advantages = vec![0.0; n];
    let mut acc = 0.0;
    for t in (0..n).rev() {
        let mask = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * values[t + 1] * mask - values[t];
        acc = delta + gamma * lambda * mask * acc;
        advantages[t] = acc;
    }
    let returns = advantages
        .iter()
        .zip(values)
        .map(|(a, v)| a + v)
        .collect();
    Ok((advantages, returns))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step_lambda_zero_is_one_step_td() {
        let (adv, ret) = compute_gae(&[2.0], &[0.5, 1.5], &[false], 0.9, 0.0).unwrap();
        let expected = 2.0 + 0.9 * 1.5 - 0.5;
        assert!((adv[0] - expected).abs() < 1e-12);
        assert!((ret[0] - (expected + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn undiscounted_monte_carlo_telescopes() {
        // gamma = lambda = 1 on a terminal episode: A_t = sum_{k>=t} r_k - V_t.
        let rewards = [1.0, 2.0, 3.0];
        let values = [0.3, 0.6, 0.9, 123.0];
        let dones = [false, false, true];
        let (adv, _) = compute_gae(&rewards, &values, &dones, 1.0, 1.0).unwrap();
        assert!((adv[0] - (6.0 - 0.3)).abs() < 1e-12);
        assert!((adv[1] - (5.0 - 0.6)).abs() < 1e-12);
        assert!((adv[2] - (3.0 - 0.9)).abs() < 1e-12);
    }

    #[test]
    fn matches_brute_force_double_loop() {
        // Oracle: A_t = sum_k (gamma*lambda)^k delta_{t+k} computed directly.
        let rewards = [1.0, 1.0];
        let values = [0.5, 0.5, 0.0];
        let dones = [false, false];
        let (gamma, lambda) = (0.9, 0.8);
        let (adv, _) = compute_gae(&rewards, &values, &dones, gamma, lambda).unwrap();

        let mut expected = vec![0.0; rewards.len()];
        for t in 0..rewards.len() {
            for k in t..rewards.len() {
                let delta = rewards[k] + gamma * values[k + 1] - values[k];
                expected[t] += (gamma * lambda).powi((k - t) as i32) * delta;
            }
        }
        for (a, e) in adv.iter().zip(&expected) {
            assert!((a - e).abs() < 1e-12, "{a} vs {e}");
        }
    }

    #[test]
    fn boundaries_block_value_flow() {
        let rewards = [1.0, 1.0, 1.0];
        let values = [0.0, 10.0, 0.0, 10.0];
        let dones = [true, false, false];
        let (adv, _) = compute_gae(&rewards, &values, &dones, 0.99, 0.95).unwrap();
        // First step is terminal: nothing from t=1 leaks in.
        assert!((adv[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(compute_gae(&[1.0], &[0.0], &[false], 0.9, 0.9).is_err());
        assert!(compute_gae(&[1.0], &[0.0, 0.0], &[false, false], 0.9, 0.9).is_err());
    }
}

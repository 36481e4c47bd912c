//! Generalized advantage estimation.

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("length mismatch: {rewards} rewards, {dones} done flags, {values} values (expected rewards + 1)")]
pub struct LengthMismatch {
    pub rewards: usize,
    pub dones: usize,
    pub values: usize,
}

/// Advantages and returns for one trajectory segment. `values` holds one
/// entry per step plus the bootstrap value of the state after the last step;
/// `dones[t]` cuts the recursion after step `t`.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>), LengthMismatch> {
    let n = rewards.len();
    if dones.len() != n || values.len() != n + 1 {
        return Err(LengthMismatch {
            rewards: n,
            dones: dones.len(),
            values: values.len(),
        });
    }
    let mut adv = vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * values[t + 1] * live - values[t];
        running = delta + gamma * lambda * live * running;
        adv[t] = running;
    }
    let ret = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, ret))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct O(T²) definition: A_t = Σ_k (γλ)^k δ_{t+k}, truncated at the
    /// first episode end at or after t.
    fn brute(rewards: &[f64], values: &[f64], dones: &[bool], gamma: f64, lambda: f64) -> Vec<f64> {
        let n = rewards.len();
        (0..n)
            .map(|t| {
                let mut total = 0.0;
                let mut w = 1.0;
                for k in t..n {
                    let next = if dones[k] { 0.0 } else { values[k + 1] };
                    total += w * (rewards[k] + gamma * next - values[k]);
                    if dones[k] {
                        break;
                    }
                    w *= gamma * lambda;
                }
                total
            })
            .collect()
    }

    #[test]
    fn undiscounted_sum_of_future_rewards() {
        let r = [1.0, 2.0, 3.0, 4.0];
        let (a, ret) = gae(&r, &[0.0; 5], &[false; 4], 1.0, 1.0).unwrap();
        assert_eq!(a, vec![10.0, 9.0, 7.0, 4.0]);
        assert_eq!(ret, a);
    }

    #[test]
    fn single_step_episode() {
        let (a, _) = gae(&[1.0], &[0.0, 5.0], &[true], 0.99, 0.95).unwrap();
        assert_eq!(a, vec![1.0]);
    }

    #[test]
    fn length_mismatch() {
        assert!(gae(&[1.0, 2.0], &[0.0, 0.0], &[false, false], 0.9, 0.9).is_err());
        assert!(gae(&[1.0], &[0.0, 0.0], &[], 0.9, 0.9).is_err());
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            steps in proptest::collection::vec((-5.0f64..5.0, -3.0f64..3.0, proptest::bool::weighted(0.15)), 20),
            boot in -3.0f64..3.0,
            gamma in 0.5f64..1.0,
            lambda in 0.0f64..1.0,
        ) {
            let r: Vec<f64> = steps.iter().map(|s| s.0).collect();
            let mut v: Vec<f64> = steps.iter().map(|s| s.1).collect();
            v.push(boot);
            let d: Vec<bool> = steps.iter().map(|s| s.2).collect();
            let (a, ret) = gae(&r, &v, &d, gamma, lambda).unwrap();
            let b = brute(&r, &v, &d, gamma, lambda);
            for t in 0..20 {
                prop_assert!((a[t] - b[t]).abs() <= 1e-10);
                prop_assert!((ret[t] - (b[t] + v[t])).abs() <= 1e-10);
            }
        }
    }
}

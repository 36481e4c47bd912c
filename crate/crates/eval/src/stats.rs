//! Percentile bootstrap confidence intervals for success rates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn half_width(&self) -> f64 {
        (self.hi - self.lo) * 0.5
    }

    /// True when the two intervals share no point.
    pub fn disjoint(&self, other: &Interval) -> bool {
        self.hi < other.lo || other.hi < self.lo
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("cannot bootstrap an empty sample")]
    Empty,
    #[error("need at least 1000 resamples, got {0}")]
    TooFewResamples(usize),
    #[error("confidence level {0} is outside (0, 1)")]
    Level(f64),
}

/// Smallest sorted value whose empirical CDF reaches `q`.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let k = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[k - 1]
}

/// Percentile bootstrap of the success rate. A resample draws `n` episode
/// indices uniformly with replacement; only the success count matters, so the
/// result is identical under any relabeling of the episodes.
pub fn bootstrap_ci(successes: &[bool], resamples: usize, level: f64, seed: u64) -> Result<Interval, StatsError> {
    let n = successes.len();
    if n == 0 {
        return Err(StatsError::Empty);
    }
    if resamples < 1000 {
        return Err(StatsError::TooFewResamples(resamples));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::Level(level));
    }
    let k = successes.iter().filter(|&&s| s).count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| {
            let hits = (0..n).filter(|_| rng.random_range(0..n) < k).count();
            hits as f64 / n as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let alpha = 1.0 - level;
    Ok(Interval {
        mean: k as f64 / n as f64,
        lo: quantile(&means, alpha / 2.0),
        hi: quantile(&means, 1.0 - alpha / 2.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn degenerate_samples_have_zero_width() {
        let zero = bootstrap_ci(&[false; 10], 10_000, 0.95, 1).unwrap();
        assert_eq!((zero.mean, zero.lo, zero.hi), (0.0, 0.0, 0.0));
        let one = bootstrap_ci(&[true; 10], 10_000, 0.95, 1).unwrap();
        assert_eq!((one.mean, one.lo, one.hi), (1.0, 1.0, 1.0));
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(bootstrap_ci(&[], 10_000, 0.95, 0), Err(StatsError::Empty));
        assert_eq!(bootstrap_ci(&[true], 10, 0.95, 0), Err(StatsError::TooFewResamples(10)));
        assert_eq!(bootstrap_ci(&[true], 1000, 1.0, 0), Err(StatsError::Level(1.0)));
    }

    #[test]
    fn quantile_is_inverse_cdf() {
        let v = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(quantile(&v, 0.25), 0.1);
        assert_eq!(quantile(&v, 0.26), 0.2);
        assert_eq!(quantile(&v, 1.0), 0.4);
        assert_eq!(quantile(&v, 0.0), 0.1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn mean_is_exact_and_relabeling_invariant(
            sample in proptest::collection::vec(any::<bool>(), 1..40),
            seed in any::<u64>(),
            rot in 0usize..40,
        ) {
            let ci = bootstrap_ci(&sample, 1000, 0.95, seed).unwrap();
            let k = sample.iter().filter(|&&s| s).count();
            prop_assert_eq!(ci.mean, k as f64 / sample.len() as f64);
            prop_assert!(0.0 <= ci.lo && ci.lo <= ci.hi && ci.hi <= 1.0);
            let mut shuffled = sample.clone();
            shuffled.rotate_left(rot % sample.len());
            shuffled.reverse();
            prop_assert_eq!(bootstrap_ci(&shuffled, 1000, 0.95, seed).unwrap(), ci);
        }
    }
}

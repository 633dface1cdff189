//! Two-party test-subset sampling: a uniformly random size-`m` subset of the
//! `N = m + n` rounds is measured and the observed Hamming distance is used
//! as a guess for the distance on the remaining `n` rounds.

use crate::error::{invalid, Error, Result};
use crate::mathcore::{mismatch_count, Word};
use crate::scalar::Real;

/// Relative slack applied to the closed `<= delta` comparison so that decimal
/// inputs such as `0.3` compare as the user wrote them.
const CLOSED_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingParams<T> {
    pub m: u128,
    pub n: u128,
    pub epsilon: T,
    pub delta: T,
}

impl<T: Real> SamplingParams<T> {
    /// Calibrates `delta` so that the failure bound equals `epsilon^2`.
    pub fn from_epsilon(epsilon: T, m: u128, n: u128) -> Result<Self> {
        let delta = delta_for(epsilon, m, n)?;
        Ok(Self { m, n, epsilon, delta })
    }

    pub fn total(&self) -> u128 {
        self.m + self.n
    }
}

/// Sampling precision `delta` for which the failure bound equals `eps^2`.
pub fn delta_for<T: Real>(epsilon: T, m: u128, n: u128) -> Result<T> {
    if !(epsilon > T::zero() && epsilon < T::one()) {
        return invalid(format!("epsilon {epsilon} outside (0, 1)"));
    }
    if m < 1 || n < 1 {
        return invalid(format!("test size m={m} and key size n={n} must both be >= 1"));
    }
    let (mf, total) = (T::from_count(m), T::from_count(m + n));
    let two = T::lit(2.0);
    // ln(2 / eps^2) without forming eps^2, which underflows in f32
    let log_term = two.ln() - two * epsilon.ln();
    Ok(((total + two) / total * (log_term / mf)).sqrt())
}

/// Value of the sampling failure bound; `vacuous` is set when it is >= 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FailureBound<T> {
    pub value: T,
    pub vacuous: bool,
}

/// `2 exp(-delta^2 m (n + m) / (m + n + 2))`, valid for `m <= n`.
pub fn failure_bound<T: Real>(delta: T, m: u128, n: u128) -> Result<FailureBound<T>> {
    if !(delta >= T::zero()) {
        return invalid(format!("delta {delta} must be non-negative"));
    }
    if m < 1 {
        return invalid("test size must be >= 1");
    }
    if m > n {
        return invalid(format!("bound requires m <= n (m={m}, n={n})"));
    }
    let (mf, total) = (T::from_count(m), T::from_count(m + n));
    let two = T::lit(2.0);
    let exponent = delta * delta * mf * (total / (total + two));
    let value = two * (-exponent).exp();
    Ok(FailureBound { value, vacuous: value >= T::one() })
}

fn check_subset(t: &[usize], total: usize) -> Result<Vec<bool>> {
    let mut mask = vec![false; total];
    for &i in t {
        if i >= total {
            return invalid(format!("index {i} out of range for {total} rounds"));
        }
        if std::mem::replace(&mut mask[i], true) {
            return invalid(format!("index {i} repeated in subset"));
        }
    }
    if t.is_empty() || t.len() == total {
        return invalid("test subset and its complement must both be non-empty");
    }
    Ok(mask)
}

/// Whether `(x, y)` is a good word for subset `t` (0-based positions):
/// the distance on `t` and on its complement differ by at most `delta`.
pub fn good_word_test(x: &Word, y: &Word, t: &[usize], delta: f64) -> Result<bool> {
    if x.len() != y.len() {
        return invalid(format!("length mismatch: {} vs {}", x.len(), y.len()));
    }
    let mask = check_subset(t, x.len())?;
    let rest: Vec<usize> = (0..x.len()).filter(|&i| !mask[i]).collect();
    let observed = mismatch_count(&x.select(t)?, &y.select(t)?)?;
    let hidden = mismatch_count(&x.select(&rest)?, &y.select(&rest)?)?;
    Ok(within_delta(observed, t.len(), hidden, rest.len(), delta))
}

/// `|a/na - b/nb| <= delta`, evaluated on integer numerators.
pub(crate) fn within_delta(a: usize, na: usize, b: usize, nb: usize, delta: f64) -> bool {
    let num = (a * nb).abs_diff(b * na) as f64;
    let scale = (na * nb) as f64;
    num <= delta * scale * (1.0 + CLOSED_SLACK)
}

/// Exact worst-case failure probability of the sampling strategy for tiny
/// instances, maximised over all word pairs with the subset uniform over
/// size-`m` subsets.
///
/// Whether a pair `(x, y)` is good for a subset depends only on the set of
/// positions where `x` and `y` differ, and every such set is realised by some
/// pair for `d >= 2`. Since the subset law is permutation invariant, the
/// failure probability further depends only on the number of mismatches, so
/// the maximum runs over mismatch counts `0..=N`.
pub fn exhaustive_failure_probability(total: usize, m: usize, d: u32, delta: f64) -> Result<f64> {
    if total > 8 || d > 3 {
        return Err(Error::ResourceLimit(format!(
            "exhaustive enumeration limited to N <= 8, d <= 3 (got N={total}, d={d})"
        )));
    }
    if d < 2 {
        return invalid("alphabet size must be at least 2");
    }
    if m < 1 || m >= total {
        return invalid(format!("need 1 <= m < N (m={m}, N={total})"));
    }
    if !(delta >= 0.0) {
        return invalid("delta must be non-negative");
    }
    let n = total - m;
    let subsets: Vec<u32> = (0u32..1 << total).filter(|s| s.count_ones() as usize == m).collect();
    let worst = (0..=total)
        .map(|mismatches| {
            let pattern: u32 = (1u32 << mismatches) - 1;
            let failures = subsets
                .iter()
                .filter(|&&s| {
                    let observed = (pattern & s).count_ones() as usize;
                    let hidden = mismatches - observed;
                    !within_delta(observed, m, hidden, n, delta)
                })
                .count();
            failures as f64 / subsets.len() as f64
        })
        .fold(0.0, f64::max);
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathcore::{all_words, binomial};
    use approx::assert_relative_eq;
    use num_traits::ToPrimitive;
    use proptest::prelude::*;

    #[test]
    fn delta_reference_value() {
        // high-precision evaluation (mpmath, 40 digits) of
        // sqrt((2e6+2) ln(2e72) / (1e6 * 2e6))
        let reference = 0.012_902_691_205_923_093;
        let delta: f64 = delta_for(1e-36, 1_000_000, 1_000_000).unwrap();
        assert_relative_eq!(delta, reference, max_relative = 1e-12);
    }

    #[test]
    fn delta_limit_near_one() {
        let (m, n) = (50u128, 70u128);
        let limit = ((m + n + 2) as f64 * 2f64.ln() / (m * (m + n)) as f64).sqrt();
        let delta: f64 = delta_for(1.0 - 1e-12, m, n).unwrap();
        assert_relative_eq!(delta, limit, max_relative = 1e-9);
    }

    #[test]
    fn delta_round_trip() {
        for (eps, m, n) in [(1e-36, 1_000_000u128, 1_000_000u128), (1e-3, 10, 30), (0.5, 3, 3), (1e-10, 5, 10u128.pow(18))] {
            let delta: f64 = delta_for(eps, m, n).unwrap();
            let bound = failure_bound(delta, m, n).unwrap();
            assert_relative_eq!(bound.value, eps * eps, max_relative = 1e-9);
        }
    }

    #[test]
    fn delta_input_errors() {
        assert!(delta_for(0.0f64, 1, 1).is_err());
        assert!(delta_for(1.0f64, 1, 1).is_err());
        assert!(delta_for(0.1f64, 0, 1).is_err());
        assert!(delta_for(0.1f64, 1, 0).is_err());
    }

    #[test]
    fn delta_f32_survives_tiny_epsilon() {
        let d32: f32 = delta_for(1e-36f32, 1_000_000, 1_000_000).unwrap();
        assert!((d32 as f64 - 0.012_902_691).abs() < 1e-6);
    }

    #[test]
    fn delta_monotonicity() {
        let n = 1000u128;
        let mut prev = f64::INFINITY;
        for m in [1u128, 2, 5, 10, 100, 500, 1000] {
            let d: f64 = delta_for(1e-9, m, n).unwrap();
            assert!(d < prev);
            prev = d;
        }
        let mut prev = 0.0;
        for eps in [0.5, 1e-2, 1e-6, 1e-20, 1e-36] {
            let d: f64 = delta_for(eps, 100, n).unwrap();
            assert!(d > prev);
            prev = d;
        }
    }

    #[test]
    fn failure_bound_examples() {
        let b = failure_bound(0.6f64, 3, 3).unwrap();
        assert_relative_eq!(b.value, 2.0 * (-0.81f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(b.value, 0.8897, max_relative = 1e-4);
        assert!(!b.vacuous);
        assert_eq!(failure_bound(1e3f64, 3, 3).unwrap().value, 0.0);
        let z = failure_bound(0.0f64, 3, 3).unwrap();
        assert_eq!(z.value, 2.0);
        assert!(z.vacuous);
        assert!(failure_bound(0.5f64, 4, 3).is_err());
    }

    fn word(s: &[u32]) -> Word {
        Word::digits(s.to_vec(), 2).unwrap()
    }

    #[test]
    fn good_word_examples() {
        let x = word(&[0, 0, 0, 0, 0, 0]);
        let y = word(&[1, 1, 1, 0, 0, 0]);
        assert!(good_word_test(&x, &x, &[0, 2], 0.0).unwrap());
        assert!(!good_word_test(&x, &y, &[0, 1, 2], 0.5).unwrap());
        assert!(good_word_test(&x, &y, &[0, 3, 4], 0.5).unwrap());
    }

    #[test]
    fn good_word_errors() {
        let x = word(&[0, 0, 0]);
        assert!(good_word_test(&x, &x, &[3], 0.1).is_err());
        assert!(good_word_test(&x, &x, &[1, 1], 0.1).is_err());
        assert!(good_word_test(&x, &x, &[], 0.1).is_err());
        assert!(good_word_test(&x, &word(&[0, 0]), &[0], 0.1).is_err());
    }

    #[test]
    fn exhaustive_examples() {
        assert_relative_eq!(exhaustive_failure_probability(6, 3, 2, 0.6).unwrap(), 0.4, max_relative = 1e-15);
        assert_eq!(exhaustive_failure_probability(6, 3, 2, 1.0).unwrap(), 0.0);
        assert!(matches!(exhaustive_failure_probability(9, 3, 2, 0.5), Err(Error::ResourceLimit(_))));
        assert!(matches!(exhaustive_failure_probability(6, 3, 4, 0.5), Err(Error::ResourceLimit(_))));
    }

    /// Full enumeration over word pairs and subsets, no symmetry reduction.
    fn brute_force(total: usize, m: usize, d: u32, delta: f64) -> f64 {
        let subsets: Vec<Vec<usize>> = (0u32..1 << total)
            .filter(|s| s.count_ones() as usize == m)
            .map(|s| (0..total).filter(|i| s >> i & 1 == 1).collect())
            .collect();
        let words: Vec<Word> = all_words(total, d).map(|w| Word::digits(w, d).unwrap()).collect();
        let mut worst: f64 = 0.0;
        for x in &words {
            for y in &words {
                let bad = subsets.iter().filter(|t| !good_word_test(x, y, t, delta).unwrap()).count();
                worst = worst.max(bad as f64 / subsets.len() as f64);
            }
        }
        worst
    }

    /// Closed form over mismatch counts with hypergeometric weights.
    fn hypergeometric(total: usize, m: usize, delta: f64) -> f64 {
        let n = total - m;
        let norm = binomial(total as u64, m as u64).to_f64().unwrap();
        (0..=total)
            .map(|dd| {
                (0..=m.min(dd))
                    .filter(|&j| dd - j <= n && !within_delta(j, m, dd - j, n, delta))
                    .map(|j| (binomial(dd as u64, j as u64) * binomial((total - dd) as u64, (m - j) as u64)).to_f64().unwrap())
                    .sum::<f64>()
                    / norm
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn reduction_matches_brute_force() {
        for (total, m, d) in [(4, 2, 2), (4, 1, 3), (5, 2, 2), (3, 1, 3), (6, 3, 2)] {
            for k in 0..=10 {
                let delta = k as f64 / 10.0;
                let fast = exhaustive_failure_probability(total, m, d, delta).unwrap();
                assert_eq!(fast, brute_force(total, m, d, delta), "N={total} m={m} d={d} delta={delta}");
            }
        }
    }

    #[test]
    fn reduction_matches_hypergeometric() {
        for total in 2..=8 {
            for m in 1..total {
                for k in 0..=10 {
                    let delta = k as f64 / 10.0;
                    let fast = exhaustive_failure_probability(total, m, 2, delta).unwrap();
                    assert_relative_eq!(fast, hypergeometric(total, m, delta), max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn exhaustive_never_exceeds_bound() {
        for total in 2..=8usize {
            for m in 1..=total / 2 {
                for d in 2..=3 {
                    for k in 0..=10 {
                        let delta = k as f64 / 10.0;
                        let p = exhaustive_failure_probability(total, m, d, delta).unwrap();
                        let b = failure_bound(delta, m as u128, (total - m) as u128).unwrap().value;
                        assert!(p <= b.min(1.0), "N={total} m={m} d={d} delta={delta}: {p} > {b}");
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn good_word_symmetric_and_permutation_invariant(
            pairs in proptest::collection::vec((0u32..3, 0u32..3), 2..9),
            seed in any::<u64>(),
            delta in 0.0f64..1.0,
        ) {
            let total = pairs.len();
            let x = Word::digits(pairs.iter().map(|p| p.0).collect(), 3).unwrap();
            let y = Word::digits(pairs.iter().map(|p| p.1).collect(), 3).unwrap();
            let size = 1 + (seed as usize % (total - 1));
            let t: Vec<usize> = (0..size).map(|i| (i * 7 + seed as usize) % total).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
            prop_assume!(!t.is_empty() && t.len() < total);
            let base = good_word_test(&x, &y, &t, delta).unwrap();
            prop_assert_eq!(base, good_word_test(&y, &x, &t, delta).unwrap());

            // reverse all positions
            let perm: Vec<usize> = (0..total).rev().collect();
            let xp = x.select(&perm).unwrap();
            let yp = y.select(&perm).unwrap();
            let tp: Vec<usize> = t.iter().map(|&i| total - 1 - i).collect();
            prop_assert_eq!(base, good_word_test(&xp, &yp, &tp, delta).unwrap());
        }
    }
}

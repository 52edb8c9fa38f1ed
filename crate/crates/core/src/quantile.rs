//! Empirical quantiles.
//!
//! The γ-quantile of `M` values is the `⌈γM⌉`-th order statistic. The
//! weighted version returns the smallest value `v` with
//! `(1/M) Σ w_m 1{x_m <= v} >= γ`, normalizing by `M` rather than by the
//! total weight.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Slack for `γM` products that land a rounding error above an integer.
const RANK_SLACK: f64 = 1e-9;

/// One-based rank `⌈γM⌉`, clamped to `[1, M]`.
pub fn order_statistic_rank(gamma: f64, m: usize) -> usize {
    let k = (gamma * m as f64 - RANK_SLACK).ceil();
    (k.max(1.0) as usize).min(m)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("quantile level must lie in (0,1), got {gamma}")))
    }
}

fn total_cmp<T: Real>(a: &T, b: &T) -> std::cmp::Ordering {
    a.partial_cmp(b).unwrap_or_else(|| a.is_nan().cmp(&b.is_nan()))
}

/// `⌈γM⌉`-th order statistic of `values`.
pub fn sample_quantile<T: Real>(values: &[T], gamma: f64) -> Result<T> {
    if values.is_empty() {
        return Err(Error::Empty("quantile input"));
    }
    check_gamma(gamma)?;
    let mut v = values.to_vec();
    let k = order_statistic_rank(gamma, v.len()) - 1;
    let (_, q, _) = v.select_nth_unstable_by(k, total_cmp);
    Ok(*q)
}

/// Same as [`sample_quantile`] on already sorted input.
pub fn sorted_quantile<T: Real>(sorted: &[T], gamma: f64) -> Result<T> {
    if sorted.is_empty() {
        return Err(Error::Empty("quantile input"));
    }
    check_gamma(gamma)?;
    Ok(sorted[order_statistic_rank(gamma, sorted.len()) - 1])
}

/// Both tails from a single sort.
pub fn sample_quantiles<T: Real>(values: &[T], gammas: &[f64]) -> Result<Vec<T>> {
    let mut v = values.to_vec();
    v.sort_by(total_cmp);
    gammas.iter().map(|&g| sorted_quantile(&v, g)).collect()
}

/// Smallest value whose normalized cumulative weight reaches `gamma`;
/// `+inf` when the total weight over `M` stays below `gamma`.
///
/// `gamma` may equal 1 here; weights larger than one can push the mass past 1.
pub fn weighted_quantile<T: Real>(values: &[T], weights: &[T], gamma: f64) -> Result<T> {
    if values.is_empty() {
        return Err(Error::Empty("weighted quantile input"));
    }
    if values.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: values.len(), got: weights.len() });
    }
    if !(gamma.is_finite() && gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidArgument(format!("quantile level must lie in (0,1], got {gamma}")));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
        return Err(Error::InvalidArgument("weights must be finite and nonnegative".into()));
    }
    if weights.iter().all(|w| *w == T::zero()) {
        return Err(Error::InvalidArgument("all weights are zero".into()));
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| total_cmp(&values[a], &values[b]));
    let target = gamma * values.len() as f64 - RANK_SLACK;
    let mut cum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        // tied values enter the cumulative mass together
        let v = values[idx[i]];
        while i < idx.len() && values[idx[i]] == v {
            cum += weights[idx[i]].as_f64();
            i += 1;
        }
        if cum >= target {
            return Ok(v);
        }
    }
    Ok(T::infinity())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn middle_of_three() {
        assert_eq!(sample_quantile(&[3.0, 1.0, 2.0], 0.5).unwrap(), 2.0);
    }

    #[test]
    fn singleton() {
        for g in [0.01, 0.5, 0.99] {
            assert_eq!(sample_quantile(&[5.0], g).unwrap(), 5.0);
        }
    }

    #[test]
    fn thousand_values_at_975() {
        let v: Vec<f64> = (1..=1000).rev().map(f64::from).collect();
        // sort-and-index oracle
        let mut s = v.clone();
        s.sort_by(f64::total_cmp);
        let k = (0.975f64 * 1000.0).ceil() as usize;
        assert_eq!(sample_quantile(&v, 0.975).unwrap(), s[k - 1]);
        assert_eq!(sample_quantile(&v, 0.975).unwrap(), 975.0);
    }

    #[test]
    fn rank_guards_rounding() {
        assert_eq!(order_statistic_rank(0.95, 2000), 1900);
        assert_eq!(order_statistic_rank(0.05, 2000), 100);
        assert_eq!(order_statistic_rank(0.025, 500), 13);
        assert_eq!(order_statistic_rank(1e-6, 10), 1);
    }

    #[test]
    fn errors() {
        assert!(sample_quantile::<f64>(&[], 0.5).is_err());
        assert!(sample_quantile(&[1.0], 1.0).is_err());
        assert!(weighted_quantile(&[1.0], &[0.0], 0.5).is_err());
        assert!(weighted_quantile(&[1.0, 2.0], &[1.0], 0.5).is_err());
    }

    #[test]
    fn weighted_all_mass_at_first() {
        assert_eq!(weighted_quantile(&[1.0, 2.0], &[2.0, 0.0], 0.9).unwrap(), 1.0);
    }

    #[test]
    fn weighted_insufficient_mass_is_infinite() {
        assert_eq!(weighted_quantile(&[1.0, 2.0], &[0.5, 0.5], 0.9).unwrap(), f64::INFINITY);
    }

    #[test]
    fn weighted_saturates_at_max() {
        let v = [3.0, 1.0, 2.0];
        assert_eq!(weighted_quantile(&v, &[1.0; 3], 1.0).unwrap(), 3.0);
    }

    fn brute_force(values: &[f64], w: &[f64], gamma: f64) -> f64 {
        let m = values.len() as f64;
        let mut cands: Vec<f64> = values.to_vec();
        cands.sort_by(f64::total_cmp);
        for v in cands {
            let mass: f64 = values.iter().zip(w).filter(|(x, _)| **x <= v).map(|(_, w)| w).sum();
            if mass / m >= gamma - 1e-12 {
                return v;
            }
        }
        f64::INFINITY
    }

    proptest! {
        #[test]
        fn unit_weights_match_unweighted(v in prop::collection::vec(-100.0f64..100.0, 1..200), g in 0.01f64..0.99) {
            let w = vec![1.0; v.len()];
            prop_assert_eq!(weighted_quantile(&v, &w, g).unwrap(), sample_quantile(&v, g).unwrap());
        }

        #[test]
        fn weighted_matches_scan(
            pairs in prop::collection::vec((-10i32..10, 0.0f64..3.0), 1..80),
            g in 0.05f64..0.99,
        ) {
            let v: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let w: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            prop_assume!(w.iter().any(|x| *x > 0.0));
            prop_assert_eq!(weighted_quantile(&v, &w, g).unwrap(), brute_force(&v, &w, g));
        }

        #[test]
        fn quantile_is_a_member(v in prop::collection::vec(-1e6f64..1e6, 1..100), g in 0.001f64..0.999) {
            let q = sample_quantile(&v, g).unwrap();
            prop_assert!(v.contains(&q));
            let below = v.iter().filter(|x| **x <= q).count();
            prop_assert!(below >= order_statistic_rank(g, v.len()));
        }
    }
}

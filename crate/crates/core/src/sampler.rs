//! Exact-count uniform selection of domain indices.
//!
//! Selection uses Knuth's Algorithm S over a `ChaCha8Rng` seeded with
//! `seed_from_u64`. When the domain is far larger than the sample
//! (`N > 10^7 * n`, or `N` beyond 64 bits), distinct indices are drawn by
//! rejection instead; each index is still equally likely to be chosen.
//! Rejection draws are sorted when at most [`SORT_LIMIT`] are wanted and
//! are otherwise produced lazily in draw order.

use std::collections::{BTreeSet, HashSet};

use num_bigint::{BigUint, RandBigInt};
use num_traits::{Float, One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Above `N > SCAN_LIMIT * n` the linear scan is abandoned for rejection sampling.
pub const SCAN_LIMIT: u64 = 10_000_000;

/// Largest rejection sample that is materialised and sorted.
pub const SORT_LIMIT: u64 = 1_000_000;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SampleError {
    #[error("sampling rate must lie in (0, 1], got {0}")]
    Rate(f64),
}

/// How many of `size` indices to draw, and from which seed.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePlan {
    size: BigUint,
    rate: f64,
    seed: u64,
    target: BigUint,
}

impl SamplePlan {
    pub fn new(size: BigUint, rate: f64, seed: u64) -> Result<Self, SampleError> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(SampleError::Rate(rate));
        }
        let target = target_count(&size, rate);
        Ok(SamplePlan {
            size,
            rate,
            seed,
            target,
        })
    }

    /// Draws exactly `min(count, size)` indices.
    pub fn with_count(size: BigUint, count: u64, seed: u64) -> Self {
        let target = BigUint::from(count).min(size.clone());
        let rate = match (target.to_f64(), size.to_f64()) {
            (Some(n), Some(total)) if total > 0.0 => n / total,
            _ => 0.0,
        };
        SamplePlan {
            size,
            rate,
            seed,
            target,
        }
    }

    pub fn size(&self) -> &BigUint {
        &self.size
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// `max(1, round(rate * size))`, clamped to `size`.
    pub fn target(&self) -> &BigUint {
        &self.target
    }

    /// Exactly [`Self::target`] distinct indices, increasing except for
    /// rejection samples above [`SORT_LIMIT`].
    pub fn indices(&self) -> Indices {
        let n = &self.target;
        let rng = ChaCha8Rng::seed_from_u64(self.seed);
        if n.is_zero() {
            return Indices(Inner::Sorted(Vec::new().into_iter()));
        }
        if n == &self.size {
            return Indices(Inner::Exhaustive {
                next: BigUint::zero(),
                end: self.size.clone(),
            });
        }
        let scan = match (self.size.to_u64(), n.to_u64()) {
            (Some(big_n), Some(small_n)) if big_n / SCAN_LIMIT <= small_n => Some((big_n, small_n)),
            _ => None,
        };
        match scan {
            Some((total, wanted)) => Indices(Inner::Selection {
                rng,
                i: 0,
                total,
                remaining: wanted,
            }),
            None if n <= &BigUint::from(SORT_LIMIT) => {
                Indices(Inner::Sorted(rejection(&self.size, n, rng).into_iter()))
            }
            None => Indices(Inner::Lazy {
                rng,
                size: self.size.clone(),
                remaining: n.clone(),
                seen: HashSet::new(),
            }),
        }
    }
}

/// Exact `round(rate * size)` using the binary expansion of `rate`.
fn target_count(size: &BigUint, rate: f64) -> BigUint {
    if size.is_zero() {
        return BigUint::zero();
    }
    let (mantissa, exponent, _) = rate.integer_decode();
    let scaled = size * BigUint::from(mantissa);
    let n = if exponent >= 0 {
        scaled << exponent as usize
    } else {
        let shift = (-exponent) as usize;
        (scaled + (BigUint::one() << (shift - 1))) >> shift
    };
    n.max(BigUint::one()).min(size.clone())
}

fn rejection(size: &BigUint, n: &BigUint, mut rng: ChaCha8Rng) -> Vec<BigUint> {
    let wanted = n.to_usize().expect("sample count fits in memory");
    let mut chosen = BTreeSet::new();
    while chosen.len() < wanted {
        chosen.insert(rng.gen_biguint_below(size));
    }
    chosen.into_iter().collect()
}

/// Iterator returned by [`SamplePlan::indices`].
pub struct Indices(Inner);

enum Inner {
    Exhaustive {
        next: BigUint,
        end: BigUint,
    },
    Selection {
        rng: ChaCha8Rng,
        i: u64,
        total: u64,
        remaining: u64,
    },
    Sorted(std::vec::IntoIter<BigUint>),
    Lazy {
        rng: ChaCha8Rng,
        size: BigUint,
        remaining: BigUint,
        seen: HashSet<BigUint>,
    },
}

impl Iterator for Indices {
    type Item = BigUint;

    fn next(&mut self) -> Option<BigUint> {
        match &mut self.0 {
            Inner::Exhaustive { next, end } => {
                if next >= end {
                    return None;
                }
                let out = next.clone();
                *next += 1u8;
                Some(out)
            }
            Inner::Selection {
                rng,
                i,
                total,
                remaining,
            } => {
                while *remaining > 0 {
                    let here = *i;
                    let left = *total - here;
                    *i += 1;
                    // select with probability remaining / left
                    if rng.gen_range(0..left) < *remaining {
                        *remaining -= 1;
                        return Some(BigUint::from(here));
                    }
                }
                None
            }
            Inner::Sorted(it) => it.next(),
            Inner::Lazy {
                rng,
                size,
                remaining,
                seen,
            } => {
                if remaining.is_zero() {
                    return None;
                }
                *remaining -= 1u8;
                loop {
                    let i = rng.gen_biguint_below(size);
                    if seen.insert(i.clone()) {
                        return Some(i);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn draw(size: u64, rate: f64, seed: u64) -> Vec<u64> {
        SamplePlan::new(BigUint::from(size), rate, seed)
            .unwrap()
            .indices()
            .map(|i| i.to_u64().unwrap())
            .collect()
    }

    #[test]
    fn full_rate_is_exhaustive() {
        assert_eq!(draw(10, 1.0, 7), (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn one_percent_of_a_thousand() {
        let got = draw(1000, 0.01, 3);
        assert_eq!(got.len(), 10);
        assert!(got.windows(2).all(|w| w[0] < w[1]));
        assert!(got.iter().all(|&i| i < 1000));
    }

    #[test]
    fn at_least_one_index() {
        assert_eq!(draw(10, 0.001, 1).len(), 1);
        assert_eq!(draw(0, 0.5, 1), Vec::<u64>::new());
    }

    #[test]
    fn rounding_is_to_nearest() {
        let n = |size: u64, r: f64| {
            SamplePlan::new(BigUint::from(size), r, 0)
                .unwrap()
                .target()
                .to_u64()
                .unwrap()
        };
        assert_eq!(n(10, 0.1), 1);
        assert_eq!(n(10, 0.14), 1);
        // 0.15 is stored just below 3/20
        assert_eq!(n(10, 0.15), 1);
        assert_eq!(n(10, 0.16), 2);
        assert_eq!(n(2, 0.25), 1);
        assert_eq!(n(3, 0.5), 2);
        assert_eq!(n(1000, 0.01), 10);
        assert_eq!(n(7, 1.0), 7);
    }

    #[test]
    fn fixed_counts() {
        let take = |size: u64, n: u64| {
            SamplePlan::with_count(BigUint::from(size), n, 4)
                .indices()
                .count()
        };
        assert_eq!(take(250, 100), 100);
        assert_eq!(take(5, 100), 5);
        assert_eq!(take(0, 100), 0);
        assert_eq!(take(7, 0), 0);
    }

    #[test]
    fn invalid_rates() {
        for r in [0.0, -0.5, 1.5, f64::NAN] {
            assert!(SamplePlan::new(BigUint::from(5u8), r, 0).is_err());
        }
    }

    #[test]
    fn rejection_path_for_huge_domains() {
        let size = BigUint::from(10u8).pow(30);
        let plan = SamplePlan::new(size.clone(), 1e-29, 9).unwrap();
        assert_eq!(plan.target(), &BigUint::from(10u8));
        let got: Vec<BigUint> = plan.indices().collect();
        assert_eq!(got.len(), 10);
        assert!(got.windows(2).all(|w| w[0] < w[1]));
        assert!(got.iter().all(|i| i < &size));
        let again: Vec<BigUint> = plan.indices().collect();
        assert_eq!(got, again);
    }

    #[test]
    fn large_rejection_samples_are_lazy() {
        let size = BigUint::from(10u8).pow(40);
        let plan = SamplePlan::new(size.clone(), 1e-20, 3).unwrap();
        // 1e-20 is not exact in binary
        assert!(plan.target() > &BigUint::from(10u8).pow(19));
        let got: Vec<BigUint> = plan.indices().take(1000).collect();
        let distinct: BTreeSet<&BigUint> = got.iter().collect();
        assert_eq!(distinct.len(), 1000);
        assert!(got.iter().all(|i| i < &size));
        assert_eq!(got, plan.indices().take(1000).collect::<Vec<_>>());
    }

    #[test]
    fn single_draws_are_uniform() {
        let runs = 100_000u64;
        let mut counts = [0u64; 10];
        for seed in 0..runs {
            let got = draw(10, 0.1, seed);
            assert_eq!(got.len(), 1);
            counts[got[0] as usize] += 1;
        }
        let expected = runs as f64 / 10.0;
        let sigma = (runs as f64 * 0.1 * 0.9).sqrt();
        for c in counts {
            assert!((c as f64 - expected).abs() <= 3.0 * sigma, "{counts:?}");
        }
        let stat: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        let critical = ChiSquared::new(9.0).unwrap().inverse_cdf(0.999);
        assert!((critical - 27.877).abs() < 1e-3);
        assert!(stat < critical, "chi-square {stat} >= {critical}");
    }

    proptest! {
        #[test]
        fn exact_count_sorted_and_deterministic(size in 1u64..5000, rate in 0.0001f64..=1.0, seed in any::<u64>()) {
            let got = draw(size, rate, seed);
            let n = got.len() as f64;
            let exact = rate * size as f64;
            prop_assert!(n >= 1.0 && n <= size as f64);
            prop_assert!(n == 1.0 || (n - exact).abs() <= 0.5 + 1e-9);
            prop_assert!(got.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(got.iter().all(|&i| i < size));
            prop_assert_eq!(got, draw(size, rate, seed));
        }
    }
}

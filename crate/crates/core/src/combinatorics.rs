//! Binomial coefficients and compensated summation.
//!
//! Shapley weights involve ratios like `1 / C(N-1, l)` and `1 / (m * C(m-1, K))`
//! at N up to 10^5, where the coefficients themselves overflow fixed-width
//! integers long before the ratios lose meaning. Counts therefore stay in wide
//! integers while the ratios are assembled in `f64` from multiplicative
//! updates: every intermediate product below 2^53 is an exact integer, so at
//! oracle-test scale the divisions are exact and at large scale the relative
//! error stays near machine epsilon.

/// `C(n, k)` as an exact `u128`, or `None` on overflow.
pub fn binom_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for j in 1..=k {
        // Intermediate value is C(n-k+j, j), an exact integer.
        result = result.checked_mul((n - k + j) as u128)? / j as u128;
    }
    Some(result)
}

/// `C(n, k)` in `f64`. Exact while the intermediate products stay below
/// 2^53; beyond that the relative error stays near machine epsilon.
pub fn binom_f64(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut result = 1.0_f64;
    for j in 1..=k {
        result = result * (n - k + j) as f64 / j as f64;
    }
    result
}

/// Neumaier-compensated floating-point accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_binomials_exact() {
        assert_eq!(binom_u128(0, 0), Some(1));
        assert_eq!(binom_u128(5, 2), Some(10));
        assert_eq!(binom_u128(12, 5), Some(792));
        assert_eq!(binom_u128(11, 12), Some(0));
        assert_eq!(binom_f64(5, 2), 10.0);
        assert_eq!(binom_f64(12, 5), 792.0);
        assert_eq!(binom_f64(3, 7), 0.0);
    }

    #[test]
    fn f64_matches_exact_while_intermediates_are_small() {
        for n in 0..=30u64 {
            for k in 0..=n {
                let exact = binom_u128(n, k).unwrap();
                assert_eq!(binom_f64(n, k), exact as f64, "C({n},{k})");
            }
        }
        for (n, k) in [(4000u64, 1u64), (4000, 2), (100_000, 1), (100_000, 2)] {
            assert_eq!(binom_f64(n, k), binom_u128(n, k).unwrap() as f64);
        }
    }

    #[test]
    fn large_binomial_relative_error() {
        let exact = binom_u128(10_000, 9).unwrap() as f64;
        let approx = binom_f64(10_000, 9);
        assert!((approx - exact).abs() / exact < 1e-12);
        // Values past the u128 range still evaluate finitely.
        assert_eq!(binom_u128(100_000, 9), None);
        assert!(binom_f64(100_000, 9).is_finite());
    }

    #[test]
    fn kahan_recovers_cancellation() {
        let mut s = KahanSum::new();
        s.add(1.0);
        for _ in 0..10_000 {
            s.add(1e-17);
        }
        assert!((s.value() - (1.0 + 1e-13)).abs() < 1e-16);
    }
}

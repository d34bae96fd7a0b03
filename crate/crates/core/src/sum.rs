//! Compensated summation and sums of integer powers.

use core::ops::AddAssign;

use crate::error::{Error, Result};

/// Largest number of terms a power sum will accept. Beyond this the
/// accumulated rounding of the compensated sum is no longer guaranteed to
/// stay below 1e-13 relative.
pub const MAX_TERMS: usize = 10_000_000;

/// Kahan-Babuska-Neumaier running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub const fn new() -> Self {
        Self {
            sum: 0.0,
            compensation: 0.0,
        }
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if !t.is_finite() {
            self.sum = t;
            return;
        }
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        if self.sum.is_finite() {
            self.sum + self.compensation
        } else {
            self.sum
        }
    }
}

impl AddAssign<f64> for NeumaierSum {
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of an iterator of values.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<NeumaierSum>().value()
}

pub(crate) fn check_terms(k: usize) -> Result<()> {
    if k > MAX_TERMS {
        return Err(Error::TooManyTerms(k));
    }
    Ok(())
}

/// `i^x` with the exact small cases kept exact.
#[inline]
pub(crate) fn int_pow(i: usize, x: f64) -> f64 {
    let base = i as f64;
    if x == 0.0 {
        1.0
    } else if x == 1.0 {
        base
    } else if x == 0.5 {
        libm::sqrt(base)
    } else {
        libm::pow(base, x)
    }
}

/// `sum_{i=1}^{k} i^x`, accumulated with compensated summation.
///
/// Refuses `k > MAX_TERMS`.
pub fn power_sum(x: f64, k: usize) -> Result<f64> {
    if !x.is_finite() {
        return Err(crate::error::invalid!("exponent must be finite, got {x}"));
    }
    if k == 0 {
        return Err(crate::error::invalid!("K must be at least 1"));
    }
    check_terms(k)?;
    Ok(compensated_sum((1..=k).map(|i| int_pow(i, x))))
}

/// Running power sums `S_1, S_2, ...` for a fixed exponent.
#[derive(Debug, Clone)]
pub struct PowerSumPrefix {
    exponent: f64,
    next: usize,
    acc: NeumaierSum,
}

impl PowerSumPrefix {
    pub fn new(exponent: f64) -> Self {
        Self {
            exponent,
            next: 1,
            acc: NeumaierSum::new(),
        }
    }
}

impl Iterator for PowerSumPrefix {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        self.acc.add(int_pow(self.next, self.exponent));
        self.next += 1;
        Some(self.acc.value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_series() {
        assert_eq!(power_sum(1.0, 10).unwrap(), 55.0);
        assert_eq!(power_sum(0.0, 7).unwrap(), 7.0);
    }

    #[test]
    fn square_roots_up_to_ten() {
        // Independent: plain left-to-right sum of sqrt(1)..sqrt(10).
        let direct: f64 = (1..=10).map(|i| (i as f64).sqrt()).sum();
        let s = power_sum(0.5, 10).unwrap();
        assert!((s - direct).abs() < 1e-14);
        assert!((s - 22.468_278_186_204_103).abs() < 1e-12);
    }

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let s = compensated_sum([1.0, 1e100, 1.0, -1e100]);
        assert_eq!(s, 2.0);
        assert_eq!(compensated_sum([1.0, f64::INFINITY, 3.0]), f64::INFINITY);
    }

    #[test]
    fn refuses_oversized_and_empty() {
        assert_eq!(power_sum(0.5, MAX_TERMS + 1), Err(Error::TooManyTerms(MAX_TERMS + 1)));
        assert!(power_sum(0.5, 0).is_err());
        assert!(power_sum(f64::NAN, 3).is_err());
    }

    #[test]
    fn prefix_matches_direct() {
        let prefix: alloc::vec::Vec<f64> = PowerSumPrefix::new(0.3).take(50).collect();
        for (k, s) in prefix.iter().enumerate() {
            let direct = power_sum(0.3, k + 1).unwrap();
            assert_eq!(*s, direct);
        }
    }

    #[test]
    fn large_k_relative_accuracy() {
        // sum_{i<=K} i = K(K+1)/2 exactly representable for K = 1e6.
        let k = 1_000_000usize;
        let s = power_sum(1.0, k).unwrap();
        assert_eq!(s, (k as f64) * (k as f64 + 1.0) / 2.0);
        // sum i^2 = K(K+1)(2K+1)/6
        let s2 = power_sum(2.0, k).unwrap();
        let exact = (k as f64) * (k as f64 + 1.0) * (2.0 * k as f64 + 1.0) / 6.0;
        assert!(((s2 - exact) / exact).abs() < 1e-15);
    }
}

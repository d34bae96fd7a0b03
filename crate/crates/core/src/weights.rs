//! Weight rules and the pooled estimate.
//!
//! With deterministic weights `w_k` summing to one, the pooled estimate
//! `sum w_k mu_k` is unbiased whenever each stage estimate is, and
//! `sum w_k^2 var_k` is an unbiased estimate of its variance, whatever the
//! true variance pattern is.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::sum::{check_terms, compensated_sum, int_pow};

/// A deterministic prescription of normalized weights.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum WeightRule {
    /// `w_k ∝ k^x`; `x = 1/2` is the square-root rule.
    PowerLaw(f64),
    /// `w_k ∝ e^{k x}` with rate `x > 0`.
    Exponential(f64),
    /// All weight on the final stage.
    LastOnly,
    /// Explicit weights, normalized by their sum.
    Custom(Vec<f64>),
}

impl WeightRule {
    /// The square-root rule, `w_k ∝ k^{1/2}`.
    pub const SQRT: WeightRule = WeightRule::PowerLaw(0.5);
    pub const UNIFORM: WeightRule = WeightRule::PowerLaw(0.0);

    pub fn validate(&self) -> Result<()> {
        match self {
            WeightRule::PowerLaw(x) if !x.is_finite() => {
                Err(invalid!("power-law exponent must be finite, got {x}"))
            }
            WeightRule::Exponential(x) if !(x.is_finite() && *x > 0.0) => {
                Err(invalid!("exponential rate must be finite and positive, got {x}"))
            }
            WeightRule::Custom(w) if w.iter().any(|v| !v.is_finite()) => {
                Err(invalid!("custom weights must be finite"))
            }
            _ => Ok(()),
        }
    }
}

/// A normalized weight vector.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Weights(Vec<f64>);

impl Weights {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of negative entries. Variance-optimal weights are never
    /// negative, so a non-zero count is a warning rather than an error.
    pub fn negative_entries(&self) -> usize {
        self.0.iter().filter(|w| **w < 0.0).count()
    }

    fn normalized(raw: Vec<f64>) -> Result<Self> {
        let total = compensated_sum(raw.iter().copied());
        if total == 0.0 || !total.is_finite() {
            return Err(Error::DegenerateWeights);
        }
        Ok(Weights(raw.into_iter().map(|w| w / total).collect()))
    }
}

impl core::ops::Deref for Weights {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Build the `K` normalized weights prescribed by `rule`.
pub fn make_weights(rule: &WeightRule, k: usize) -> Result<Weights> {
    if k == 0 {
        return Err(invalid!("K must be at least 1"));
    }
    rule.validate()?;
    match rule {
        WeightRule::PowerLaw(x) => {
            check_terms(k)?;
            Weights::normalized((1..=k).map(|i| int_pow(i, *x)).collect())
        }
        WeightRule::Exponential(x) => {
            // e^{(k-K)x}: the largest term is exactly 1, so nothing overflows.
            let raw = (1..=k)
                .map(|i| libm::exp((i as f64 - k as f64) * x))
                .collect();
            Weights::normalized(raw)
        }
        WeightRule::LastOnly => {
            let mut w = vec![0.0; k];
            w[k - 1] = 1.0;
            Ok(Weights(w))
        }
        WeightRule::Custom(w) => {
            if w.len() != k {
                return Err(invalid!("custom weights have length {}, expected {k}", w.len()));
            }
            Weights::normalized(w.clone())
        }
    }
}

/// One adaptation round's output.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StageEstimate {
    pub mu_hat: f64,
    /// Unbiased estimate of the variance of `mu_hat` (the variance of the
    /// stage mean, not of a single observation).
    pub var_hat: f64,
    pub n: usize,
}

impl StageEstimate {
    pub fn new(mu_hat: f64, var_hat: f64, n: usize) -> Result<Self> {
        let s = Self { mu_hat, var_hat, n };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu_hat.is_finite() {
            return Err(invalid!("stage mu_hat must be finite, got {}", self.mu_hat));
        }
        if !(self.var_hat.is_finite() && self.var_hat >= 0.0) {
            return Err(invalid!(
                "stage var_hat must be finite and non-negative, got {}",
                self.var_hat
            ));
        }
        if self.n == 0 {
            return Err(invalid!("stage sample size must be at least 1"));
        }
        Ok(())
    }
}

/// The pooled estimate.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CombinedEstimate {
    pub mu_hat: f64,
    pub var_hat: f64,
    pub weights: Weights,
    pub k: usize,
}

/// Pool stage estimates with a deterministic rule.
pub fn combine(stages: &[StageEstimate], rule: &WeightRule) -> Result<CombinedEstimate> {
    let weights = make_weights(rule, stages.len().max(1))?;
    if stages.is_empty() {
        return Err(invalid!("at least one stage is required"));
    }
    combine_with(stages, weights)
}

/// Pool stage estimates with an explicit, already normalized weight vector.
pub fn combine_with(stages: &[StageEstimate], weights: Weights) -> Result<CombinedEstimate> {
    if stages.is_empty() {
        return Err(invalid!("at least one stage is required"));
    }
    if weights.len() != stages.len() {
        return Err(invalid!(
            "{} weights for {} stages",
            weights.len(),
            stages.len()
        ));
    }
    for s in stages {
        s.validate()?;
    }
    let mu_hat = compensated_sum(stages.iter().zip(weights.iter()).map(|(s, w)| w * s.mu_hat));
    let var_hat =
        compensated_sum(stages.iter().zip(weights.iter()).map(|(s, w)| w * w * s.var_hat));
    Ok(CombinedEstimate {
        mu_hat,
        var_hat,
        k: stages.len(),
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn stage(mu: f64, var: f64) -> StageEstimate {
        StageEstimate::new(mu, var, 10).unwrap()
    }

    #[test]
    fn uniform_power_law() {
        let w = make_weights(&WeightRule::PowerLaw(0.0), 3).unwrap();
        for v in w.iter() {
            assert_relative_eq!(*v, 1.0 / 3.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn sqrt_rule_two_stages() {
        let w = make_weights(&WeightRule::SQRT, 2).unwrap();
        let r2 = 2f64.sqrt();
        assert_relative_eq!(w[0], 1.0 / (1.0 + r2), max_relative = 1e-15);
        assert_relative_eq!(w[1], r2 / (1.0 + r2), max_relative = 1e-15);
        assert!((w[0] - 0.414214).abs() < 1e-6);
        assert!((w[1] - 0.585786).abs() < 1e-6);
    }

    #[test]
    fn last_only() {
        let w = make_weights(&WeightRule::LastOnly, 4).unwrap();
        assert_eq!(w.as_slice(), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn custom_errors_and_warnings() {
        assert!(matches!(
            make_weights(&WeightRule::Custom(vec![1.0, 2.0]), 3),
            Err(Error::InvalidArgument(_))
        ));
        assert_eq!(
            make_weights(&WeightRule::Custom(vec![1.0, -1.0]), 2),
            Err(Error::DegenerateWeights)
        );
        let w = make_weights(&WeightRule::Custom(vec![-1.0, 3.0]), 2).unwrap();
        assert_eq!(w.as_slice(), &[-0.5, 1.5]);
        assert_eq!(w.negative_entries(), 1);
    }

    #[test]
    fn exponential_rate_must_be_positive() {
        assert!(make_weights(&WeightRule::Exponential(0.0), 3).is_err());
        assert!(make_weights(&WeightRule::Exponential(-1.0), 3).is_err());
        assert!(make_weights(&WeightRule::Exponential(f64::INFINITY), 3).is_err());
        assert!(make_weights(&WeightRule::PowerLaw(f64::NAN), 3).is_err());
        assert!(make_weights(&WeightRule::SQRT, 0).is_err());
    }

    #[test]
    fn exponential_converges_to_last_only() {
        for k in 1..=20 {
            let w = make_weights(&WeightRule::Exponential(100.0), k).unwrap();
            for v in &w[..k - 1] {
                assert!(*v < 1e-40);
            }
            assert_eq!(w[k - 1], 1.0);
        }
        // Huge rates underflow to exactly last-only instead of failing.
        let w = make_weights(&WeightRule::Exponential(1e6), 5).unwrap();
        assert_eq!(w.as_slice(), &[0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn combine_examples() {
        let c = combine(&[stage(2.0, 1.0), stage(4.0, 1.0)], &WeightRule::UNIFORM).unwrap();
        assert_relative_eq!(c.mu_hat, 3.0, max_relative = 1e-15);
        assert_relative_eq!(c.var_hat, 0.5, max_relative = 1e-15);

        for rule in [WeightRule::SQRT, WeightRule::LastOnly, WeightRule::Exponential(2.0)] {
            let c = combine(&[stage(1.0, 0.0)], &rule).unwrap();
            assert_eq!(c.mu_hat, 1.0);
            assert_eq!(c.var_hat, 0.0);
            assert_eq!(c.k, 1);
        }

        let c = combine(&[stage(0.0, 1.0), stage(1.0, 0.5)], &WeightRule::SQRT).unwrap();
        let r2 = 2f64.sqrt();
        assert_relative_eq!(c.mu_hat, r2 / (1.0 + r2), max_relative = 1e-15);
        assert_relative_eq!(c.var_hat, 2.0 / ((1.0 + r2) * (1.0 + r2)), max_relative = 1e-14);
        assert!((c.mu_hat - 0.585786).abs() < 1e-6);
        assert!((c.var_hat - 0.343146).abs() < 1e-6);
    }

    #[test]
    fn combine_rejects_bad_input() {
        assert!(combine(&[], &WeightRule::SQRT).is_err());
        let bad = StageEstimate {
            mu_hat: f64::NAN,
            var_hat: 1.0,
            n: 3,
        };
        assert!(combine(&[bad], &WeightRule::SQRT).is_err());
        assert!(StageEstimate::new(0.0, -1.0, 3).is_err());
        assert!(StageEstimate::new(0.0, 1.0, 0).is_err());
    }

    fn any_rule() -> impl Strategy<Value = WeightRule> {
        prop_oneof![
            (-3.0f64..3.0).prop_map(WeightRule::PowerLaw),
            (0.01f64..50.0).prop_map(WeightRule::Exponential),
            Just(WeightRule::LastOnly),
        ]
    }

    proptest! {
        #[test]
        fn weights_sum_to_one(rule in any_rule(), k in 1usize..300) {
            let w = make_weights(&rule, k).unwrap();
            prop_assert_eq!(w.len(), k);
            let total = compensated_sum(w.iter().copied());
            prop_assert!((total - 1.0).abs() <= 1e-12);
            prop_assert_eq!(&w, &make_weights(&rule, k).unwrap());
        }

        #[test]
        fn power_law_monotonicity(x in -3.0f64..3.0, k in 2usize..100) {
            let w = make_weights(&WeightRule::PowerLaw(x), k).unwrap();
            for pair in w.windows(2) {
                if x > 0.0 {
                    prop_assert!(pair[1] > pair[0]);
                } else if x < 0.0 {
                    prop_assert!(pair[1] < pair[0]);
                } else {
                    prop_assert_eq!(pair[1], pair[0]);
                }
            }
        }

        #[test]
        fn combine_is_shift_equivariant(
            mus in proptest::collection::vec(-10.0f64..10.0, 1..30),
            shift in -100.0f64..100.0,
            rule in any_rule(),
        ) {
            let stages: Vec<_> = mus.iter().enumerate()
                .map(|(i, m)| stage(*m, 0.1 + i as f64))
                .collect();
            let shifted: Vec<_> = mus.iter().enumerate()
                .map(|(i, m)| stage(*m + shift, 0.1 + i as f64))
                .collect();
            let a = combine(&stages, &rule).unwrap();
            let b = combine(&shifted, &rule).unwrap();
            prop_assert!((b.mu_hat - a.mu_hat - shift).abs() <= 1e-12 * (1.0 + shift.abs() + a.mu_hat.abs()));
            prop_assert_eq!(a.var_hat, b.var_hat);
        }
    }
}

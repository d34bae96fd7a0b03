//! Variance-profile families and robustness sweeps of the square-root rule.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::ineff::rho_general;
use crate::rng;
use crate::sum::int_pow;

/// True stage variances `v_k = Var(mu_k)`, `k = 1..K`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VarianceProfile {
    values: Vec<f64>,
    label: String,
}

impl VarianceProfile {
    pub fn new(values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid!("variance profile is empty"));
        }
        if let Some((k, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(invalid!("variance {} at k={} is not finite and positive", v, k + 1));
        }
        Ok(Self {
            values,
            label: label.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Inefficiency of the square-root rule on this profile.
    pub fn sqrt_rule_ineff(&self) -> Result<f64> {
        rho_general(&self.values)
    }

    /// Checks the convex-decreasing constraints, returning the first one
    /// that fails.
    pub fn check_convex_decreasing(&self) -> core::result::Result<(), ConstraintViolation> {
        let v = &self.values;
        if v[0] != 1.0 {
            return Err(ConstraintViolation::Start);
        }
        for (i, s) in v.iter().enumerate() {
            if *s < 1.0 / (i + 1) as f64 {
                return Err(ConstraintViolation::Floor(i + 1));
            }
        }
        for (i, w) in v.windows(2).enumerate() {
            if w[1] > w[0] {
                return Err(ConstraintViolation::Increase(i + 2));
            }
        }
        for (i, w) in v.windows(3).enumerate() {
            if w[2] < 2.0 * w[1] - w[0] {
                return Err(ConstraintViolation::Concave(i + 3));
            }
        }
        Ok(())
    }
}

impl core::ops::Deref for VarianceProfile {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

/// A failed convex-decreasing constraint, with the offending 1-based index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintViolation {
    Start,
    Floor(usize),
    Increase(usize),
    Concave(usize),
}

/// `v_k = k^{-y}`.
pub fn profile_power_law(y: f64, k: usize) -> Result<VarianceProfile> {
    if k == 0 {
        return Err(invalid!("K must be at least 1"));
    }
    if !y.is_finite() {
        return Err(invalid!("decay rate must be finite, got {y}"));
    }
    VarianceProfile::new(
        (1..=k).map(|i| int_pow(i, -y)).collect(),
        format!("power-law y={y} K={k}"),
    )
}

/// `k1` stages with `v_k = 1/k`, then `k2` stages held at `1/(k1+1)`.
pub fn profile_plateau(k1: usize, k2: usize) -> Result<VarianceProfile> {
    if k1 == 0 {
        return Err(invalid!("plateau needs k1 >= 1"));
    }
    let level = 1.0 / (k1 + 1) as f64;
    let values = (1..=k1)
        .map(|k| 1.0 / k as f64)
        .chain(core::iter::repeat_n(level, k2))
        .collect();
    VarianceProfile::new(values, format!("plateau k1={k1} k2={k2}"))
}

/// `flat_len` copies of `flat_var` followed by `tail_len` copies of `tail_var`.
pub fn profile_transient(
    flat_len: usize,
    flat_var: f64,
    tail_len: usize,
    tail_var: f64,
) -> Result<VarianceProfile> {
    if flat_len == 0 || tail_len == 0 {
        return Err(invalid!("transient lengths must be at least 1"));
    }
    let values = core::iter::repeat_n(flat_var, flat_len)
        .chain(core::iter::repeat_n(tail_var, tail_len))
        .collect();
    VarianceProfile::new(
        values,
        format!("transient {flat_len}x{flat_var} then {tail_len}x{tail_var}"),
    )
}

/// Random convex, decreasing profiles with `v_1 = 1` and `v_k >= 1/k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ConvexDecreasingSampler {
    pub k: usize,
    pub seed: u64,
}

impl ConvexDecreasingSampler {
    pub fn new(k: usize, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(invalid!("K must be at least 1"));
        }
        Ok(Self { k, seed })
    }

    /// The profile drawn from this sampler's own seed.
    pub fn sample(&self) -> VarianceProfile {
        self.draw(&mut rng::master(self.seed))
    }

    /// Profile number `index` of a sweep keyed by this sampler's seed.
    pub fn sample_indexed(&self, index: u64) -> VarianceProfile {
        self.draw(&mut rng::stream(self.seed, index))
    }

    /// `v_1 = 1`, `v_2 ~ U[1/2, 1]`, then for `k >= 3`
    /// `v_k ~ U[max(1/k, 2 v_{k-1} - v_{k-2}), v_{k-1}]`.
    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> VarianceProfile {
        let mut v = Vec::with_capacity(self.k);
        v.push(1.0);
        if self.k >= 2 {
            v.push(rng::uniform(rng, 0.5, 1.0));
        }
        for k in 3..=self.k {
            let prev = v[k - 2];
            let lower = (1.0 / k as f64).max(2.0 * prev - v[k - 3]);
            v.push(rng::uniform(rng, lower, prev));
        }
        VarianceProfile {
            values: v,
            label: format!("convex-decreasing K={} seed={}", self.k, self.seed),
        }
    }
}

/// Result of a convex-decreasing robustness sweep.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SweepResult {
    pub k: usize,
    pub count_total: u64,
    pub count_exceeding: u64,
    pub threshold: f64,
    pub worst_rho: f64,
    /// Sample index of the worst profile.
    pub worst_index: u64,
    pub worst_profile: VarianceProfile,
    pub seed: u64,
}

/// Mergeable partial state of a sweep.
///
/// Merging is associative and commutative (ties on the worst value go to the
/// lower sample index), so any partition of the index range into chunks gives
/// the same final result.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAccumulator {
    count_total: u64,
    count_exceeding: u64,
    worst: Option<(f64, u64, VarianceProfile)>,
}

impl SweepAccumulator {
    pub fn new() -> Self {
        Self {
            count_total: 0,
            count_exceeding: 0,
            worst: None,
        }
    }

    pub fn record(&mut self, index: u64, rho: f64, profile: impl FnOnce() -> VarianceProfile, threshold: f64) {
        self.count_total += 1;
        if rho > threshold {
            self.count_exceeding += 1;
        }
        let better = match &self.worst {
            None => true,
            Some((w, i, _)) => rho > *w || (rho == *w && index < *i),
        };
        if better {
            self.worst = Some((rho, index, profile()));
        }
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.count_total += other.count_total;
        self.count_exceeding += other.count_exceeding;
        self.worst = match (self.worst, other.worst) {
            (None, w) | (w, None) => w,
            (Some(a), Some(b)) => {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    Some(b)
                } else {
                    Some(a)
                }
            }
        };
        self
    }

    pub fn finish(self, sampler: &ConvexDecreasingSampler, threshold: f64) -> Option<SweepResult> {
        let (worst_rho, worst_index, worst_profile) = self.worst?;
        Some(SweepResult {
            k: sampler.k,
            count_total: self.count_total,
            count_exceeding: self.count_exceeding,
            threshold,
            worst_rho,
            worst_index,
            worst_profile,
            seed: sampler.seed,
        })
    }
}

impl Default for SweepAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

/// Evaluates samples `range` of a sweep into an accumulator.
pub fn sweep_convex_range(
    sampler: &ConvexDecreasingSampler,
    range: core::ops::Range<u64>,
    threshold: f64,
) -> Result<SweepAccumulator> {
    let mut acc = SweepAccumulator::new();
    for i in range {
        let profile = sampler.sample_indexed(i);
        let rho = profile.sqrt_rule_ineff()?;
        acc.record(i, rho, || profile, threshold);
    }
    Ok(acc)
}

/// Draws `n_samples` convex-decreasing profiles and records how often the
/// square-root rule's inefficiency exceeds `threshold`.
pub fn sweep_convex(k: usize, n_samples: u64, seed: u64, threshold: f64) -> Result<SweepResult> {
    if n_samples == 0 {
        return Err(invalid!("n_samples must be at least 1"));
    }
    let sampler = ConvexDecreasingSampler::new(k, seed)?;
    let acc = sweep_convex_range(&sampler, 0..n_samples, threshold)?;
    acc.finish(&sampler, threshold)
        .ok_or_else(|| invalid!("sweep produced no samples"))
}

/// Worst plateau configuration found by [`sweep_plateau`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PlateauSweep {
    pub max_rho: f64,
    pub k1: usize,
    pub k2: usize,
}

/// Exhaustive scan of the square-root rule over plateau profiles with
/// `k1 ∈ 1..=k1_max`, `k2 ∈ 1..=k2_max`.
pub fn sweep_plateau(k1_max: usize, k2_max: usize) -> Result<PlateauSweep> {
    if k1_max == 0 || k2_max == 0 {
        return Err(invalid!("plateau sweep bounds must be at least 1"));
    }
    let mut best = PlateauSweep {
        max_rho: f64::NEG_INFINITY,
        k1: 0,
        k2: 0,
    };
    for k1 in 1..=k1_max {
        for k2 in 1..=k2_max {
            let r = profile_plateau(k1, k2)?.sqrt_rule_ineff()?;
            if r > best.max_rho {
                best = PlateauSweep { max_rho: r, k1, k2 };
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ineff::rho;
    use alloc::vec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn power_law_profiles() {
        assert_eq!(profile_power_law(0.0, 4).unwrap().values(), &[1.0; 4]);
        assert_eq!(profile_power_law(1.0, 3).unwrap().values(), &[1.0, 0.5, 1.0 / 3.0]);
        let p = profile_power_law(0.5, 2).unwrap();
        assert_relative_eq!(p[1], 1.0 / 2f64.sqrt(), max_relative = 1e-15);
        assert!(profile_power_law(1.0, 0).is_err());
    }

    #[test]
    fn plateau_profiles() {
        let p = profile_plateau(5, 5).unwrap();
        let min6: Vec<f64> = (1..=10).map(|k| 1.0 / (k.min(6) as f64)).collect();
        assert_eq!(p.values(), &min6[..]);
        assert_eq!(profile_plateau(1, 0).unwrap().values(), &[1.0]);
        assert_eq!(profile_plateau(2, 1).unwrap().values(), profile_power_law(1.0, 3).unwrap().values());
        assert!(profile_plateau(0, 3).is_err());
    }

    #[test]
    fn transient_profiles() {
        let p = profile_transient(3, 1.0, 10, 0.01).unwrap();
        let r = p.sqrt_rule_ineff().unwrap();
        assert!((r - 6.365).abs() < 1e-3, "{r}");

        let flat = profile_transient(1, 1.0, 1, 1.0).unwrap();
        assert_relative_eq!(
            flat.sqrt_rule_ineff().unwrap(),
            rho(0.5, 0.0, 2).unwrap(),
            max_relative = 1e-14
        );
        assert!((flat.sqrt_rule_ineff().unwrap() - 1.0294).abs() < 1e-4);

        let a = profile_transient(2, 5.0, 2, 5.0).unwrap().sqrt_rule_ineff().unwrap();
        let b = profile_transient(2, 1.0, 2, 1.0).unwrap().sqrt_rule_ineff().unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-14);

        assert!(profile_transient(0, 1.0, 1, 1.0).is_err());
        assert!(profile_transient(1, 0.0, 1, 1.0).is_err());
    }

    #[test]
    fn sampler_is_deterministic() {
        let s = ConvexDecreasingSampler::new(12, 99).unwrap();
        assert_eq!(s.sample(), s.sample());
        assert_eq!(s.sample_indexed(4), s.sample_indexed(4));
        assert_ne!(s.sample_indexed(4), s.sample_indexed(5));
    }

    #[test]
    fn short_samplers() {
        let one = ConvexDecreasingSampler::new(1, 3).unwrap().sample();
        assert_eq!(one.values(), &[1.0]);
        let two = ConvexDecreasingSampler::new(2, 3).unwrap().sample();
        assert!((0.5..=1.0).contains(&two[1]));
        assert!(ConvexDecreasingSampler::new(0, 3).is_err());
    }

    #[test]
    fn violations_are_detected() {
        let p = |v: Vec<f64>| VarianceProfile::new(v, "t").unwrap();
        assert_eq!(p(vec![0.9, 0.8]).check_convex_decreasing(), Err(ConstraintViolation::Start));
        assert_eq!(p(vec![1.0, 0.4]).check_convex_decreasing(), Err(ConstraintViolation::Floor(2)));
        assert_eq!(p(vec![1.0, 0.9, 0.95]).check_convex_decreasing(), Err(ConstraintViolation::Increase(3)));
        assert_eq!(p(vec![1.0, 0.9, 0.7]).check_convex_decreasing(), Err(ConstraintViolation::Concave(3)));
        assert_eq!(p(vec![1.0, 0.7, 0.5]).check_convex_decreasing(), Ok(()));
    }

    #[test]
    fn plateau_sweep_examples() {
        let one = sweep_plateau(1, 1).unwrap();
        assert_eq!((one.k1, one.k2), (1, 1));
        assert_relative_eq!(
            one.max_rho,
            rho_general(&[1.0, 0.5]).unwrap(),
            max_relative = 1e-15
        );
        assert!(sweep_plateau(5, 0).is_err());
    }

    #[test]
    fn convex_sweep_single_sample() {
        let r = sweep_convex(5, 1, 11, 9.0 / 8.0).unwrap();
        assert_eq!(r.count_total, 1);
        let p = ConvexDecreasingSampler::new(5, 11).unwrap().sample_indexed(0);
        assert_eq!(r.worst_rho, p.sqrt_rule_ineff().unwrap());
        assert_eq!(r.worst_profile, p);
        assert!(sweep_convex(5, 0, 11, 9.0 / 8.0).is_err());
    }

    #[test]
    fn sweep_is_partition_independent() {
        let sampler = ConvexDecreasingSampler::new(10, 5).unwrap();
        let whole = sweep_convex_range(&sampler, 0..3000, 1.1).unwrap();
        let pieces = [0..7, 7..1000, 1000..1001, 1001..3000];
        let merged = pieces
            .iter()
            .rev()
            .map(|r| sweep_convex_range(&sampler, r.clone(), 1.1).unwrap())
            .fold(SweepAccumulator::new(), SweepAccumulator::merge);
        assert_eq!(whole, merged);
    }

    proptest! {
        #[test]
        fn sampled_profiles_satisfy_constraints(k in 1usize..60, seed in any::<u64>(), index in 0u64..1000) {
            let p = ConvexDecreasingSampler::new(k, seed).unwrap().sample_indexed(index);
            prop_assert_eq!(p.len(), k);
            prop_assert_eq!(p.check_convex_decreasing(), Ok(()));
            prop_assert!(p.sqrt_rule_ineff().unwrap() >= 1.0 - 1e-12);
        }

        #[test]
        fn power_law_profile_matches_analytic(y in 0.0f64..2.0, k in 1usize..300) {
            let g = profile_power_law(y, k).unwrap().sqrt_rule_ineff().unwrap();
            let a = rho(0.5, y, k).unwrap();
            prop_assert!(((g - a) / a).abs() <= 1e-12);
        }
    }
}

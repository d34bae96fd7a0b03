//! Registry of reproducible numeric claims.
//!
//! Each claim id maps to one or more [`ReportRow`]s. Most claims produce a
//! single row. The stochastic sweeps add a `.count` row next to the worst-case
//! row, and a few claims carry companion rows for their second half.

use std::fmt;

use estcombine_core::ais::{AisConfig, GaussianLocation, StandardNormalProblem};
use estcombine_core::ineff::{self, RateBounds};
use estcombine_core::sum::power_sum;
use estcombine_core::varmodels::{profile_plateau, profile_power_law, profile_transient, sweep_plateau};
use estcombine_core::weights::{make_weights, WeightRule};
use estcombine_core::{rng, Result};
use rand::Rng;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::parallel;

/// Expected value of a claim.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Expected {
    /// Pass when `|computed - value| <= tolerance`.
    Value { value: f64, tolerance: f64 },
    /// Pass when `low <= computed <= high`.
    Interval { low: f64, high: f64 },
}

impl Expected {
    pub fn admits(&self, computed: f64) -> bool {
        match *self {
            Expected::Value { value, tolerance } => (computed - value).abs() <= tolerance,
            Expected::Interval { low, high } => low <= computed && computed <= high,
        }
    }
}

/// One reproduced number.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub claim_id: String,
    pub expected: Expected,
    pub computed_value: f64,
    pub pass: bool,
}

impl ReportRow {
    pub fn new(claim_id: impl Into<String>, expected: Expected, computed_value: f64) -> Self {
        Self {
            claim_id: claim_id.into(),
            pass: expected.admits(computed_value),
            expected,
            computed_value,
        }
    }

    fn value(id: &str, value: f64, tolerance: f64, computed: f64) -> Self {
        Self::new(id, Expected::Value { value, tolerance }, computed)
    }

    fn interval(id: &str, low: f64, high: f64, computed: f64) -> Self {
        Self::new(id, Expected::Interval { low, high }, computed)
    }

    pub fn tolerance(&self) -> f64 {
        match self.expected {
            Expected::Value { tolerance, .. } => tolerance,
            Expected::Interval { .. } => 0.0,
        }
    }
}

impl Serialize for ReportRow {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("ReportRow", 5)?;
        st.serialize_field("claim_id", &self.claim_id)?;
        match self.expected {
            Expected::Value { value, .. } => st.serialize_field("paper_value", &value)?,
            Expected::Interval { low, high } => st.serialize_field("paper_value", &[low, high])?,
        }
        st.serialize_field("computed_value", &self.computed_value)?;
        st.serialize_field("tolerance", &self.tolerance())?;
        st.serialize_field("pass", &self.pass)?;
        st.end()
    }
}

/// Six significant digits for human-readable tables.
pub struct Sig6(pub f64);

impl fmt::Display for Sig6 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.0;
        if v == 0.0 || !v.is_finite() {
            return write!(f, "{v}");
        }
        let mag = v.abs().log10().floor() as i32;
        if !(-4..6).contains(&mag) {
            write!(f, "{v:.5e}")
        } else {
            let decimals = (5 - mag).max(0) as usize;
            write!(f, "{v:.decimals$}")
        }
    }
}

impl fmt::Display for Expected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Expected::Value { value, tolerance } => write!(f, "{} ± {}", Sig6(value), Sig6(tolerance)),
            Expected::Interval { low, high } => write!(f, "[{}, {}]", Sig6(low), Sig6(high)),
        }
    }
}

/// Stable claim identifiers, in report order.
pub const CLAIM_IDS: &[&str] = &[
    "ninebyeight",
    "minimax",
    "monotone",
    "sandwich",
    "plateau104",
    "plateau1121",
    "transient637",
    "scramblednet43",
    "gammalog2",
    "gammalog10",
    "gammaoracle",
    "convexK5",
    "convexK10",
    "convexK20",
    "aisunbiased",
    "aiscorr",
    "aisvarhat",
    "biasdemo",
    "rhooracle",
];

/// Budget knobs for the stochastic claims.
#[derive(Debug, Clone, Copy)]
pub struct ClaimContext {
    pub seed: u64,
    /// Profiles per convex-decreasing sweep.
    pub samples: u64,
}

impl Default for ClaimContext {
    fn default() -> Self {
        Self {
            seed: 42,
            samples: REFERENCE_SAMPLES,
        }
    }
}

/// Sample budget the sweep count intervals are stated for.
pub const REFERENCE_SAMPLES: u64 = 1_000_000;

/// Acceptance intervals for the convex-decreasing sweeps at 1e6 samples:
/// `(K, count_low, count_high, worst_low, worst_high)`.
pub const CONVEX_INTERVALS: [(usize, f64, f64, f64, f64); 3] = [
    (5, 2.0, 100.0, 1.10, 1.20),
    (10, 1000.0, 3500.0, 1.22, 1.37),
    (20, 20.0, 400.0, 1.19, 1.33),
];

pub fn is_known(id: &str) -> bool {
    CLAIM_IDS.contains(&id)
}

/// Evaluates one claim.
pub fn evaluate(id: &str, ctx: &ClaimContext) -> Result<Vec<ReportRow>> {
    let rows = match id {
        "ninebyeight" => {
            let big = ineff::rho(0.5, 1.0, 1_000_000)?;
            let mut cap = 0.0f64;
            for y in [0.0, 1.0] {
                for r in ineff::rho_prefix(0.5, y, 10_000)? {
                    cap = cap.max(r);
                }
            }
            let unit = RateBounds::new(0.0, 1.0)?;
            vec![
                ReportRow::interval("ninebyeight", 1.1240, 1.1250, big),
                ReportRow::interval("ninebyeight.cap", 1.0, 9.0 / 8.0 + 1e-12, cap),
                ReportRow::value("ninebyeight.asymptote", 9.0 / 8.0, 0.0, ineff::asymptotic_ineff(&unit)),
            ]
        }
        "minimax" => {
            let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
            let mut worst = 0.0f64;
            for k in [2, 5, 10, 100] {
                let best = ineff::minimax_scan(k, &grid)?.best_x.unwrap_or(f64::NAN);
                worst = worst.max((best - 0.5).abs());
            }
            vec![ReportRow::value("minimax", 0.5, 0.0, 0.5 + worst)]
        }
        "monotone" => {
            let check = ineff::rho_halfrule_monotone_check(10_000)?;
            let min_all = check.ratios.iter().copied().fold(f64::INFINITY, f64::min);
            let min_small = check.ratios[..7].iter().copied().fold(f64::INFINITY, f64::min);
            vec![
                ReportRow::interval("monotone", 1.0 + f64::EPSILON, f64::INFINITY, min_all),
                ReportRow::interval("monotone.small", 1.0038, f64::INFINITY, min_small),
            ]
        }
        "sandwich" => vec![ReportRow::value("sandwich", 0.0, 0.0, sandwich_violations()? as f64)],
        "plateau104" => {
            let r = profile_plateau(5, 5)?.sqrt_rule_ineff()?;
            vec![ReportRow::interval("plateau104", 1.035, 1.040, r)]
        }
        "plateau1121" => {
            let r = sweep_plateau(100, 100)?;
            vec![ReportRow::interval("plateau1121", 1.0, 1.1215, r.max_rho)]
        }
        "transient637" => {
            let r = profile_transient(3, 1.0, 10, 0.01)?.sqrt_rule_ineff()?;
            vec![ReportRow::interval("transient637", 6.33, 6.40, r)]
        }
        "scramblednet43" => {
            let b = RateBounds::new(0.0, 2.0)?;
            vec![ReportRow::value("scramblednet43", 4.0 / 3.0, 0.0, ineff::asymptotic_ineff(&b))]
        }
        "gammalog2" => {
            let b = ineff::gamma_last_iterate_limit(std::f64::consts::LN_2, 1)?.bound;
            vec![ReportRow::value("gammalog2", 2.0, 1e-12, b)]
        }
        "gammalog10" => {
            let b = ineff::gamma_last_iterate_limit(std::f64::consts::LN_10, 1)?.bound;
            vec![ReportRow::value("gammalog10", 10.0 / 9.0, 1e-12, b)]
        }
        "gammaoracle" => vec![ReportRow::value("gammaoracle", 0.0, 1e-10, gamma_oracle_error(ctx.seed, 100)?)],
        "convexK5" | "convexK10" | "convexK20" => {
            let k: usize = id["convexK".len()..].parse().expect("claim id suffix");
            let (_, clo, chi, wlo, whi) = *CONVEX_INTERVALS
                .iter()
                .find(|c| c.0 == k)
                .expect("interval for K");
            let r = parallel::sweep_convex(k, ctx.samples, ctx.seed, 9.0 / 8.0)?;
            let scale = ctx.samples as f64 / REFERENCE_SAMPLES as f64;
            // Smaller budgets see fewer extreme profiles, so only the upper
            // end of the worst-case interval still applies.
            let wlo = if ctx.samples < REFERENCE_SAMPLES { 1.0 } else { wlo };
            vec![
                ReportRow::interval(id, wlo, whi, r.worst_rho),
                ReportRow::interval(&format!("{id}.count"), clo * scale, chi * scale, r.count_exceeding as f64),
            ]
        }
        "aisunbiased" | "aiscorr" => {
            let r = 10_000u64;
            let s = parallel::unbiasedness_study(
                &StandardNormalProblem::light_tailed(),
                &GaussianLocation::new(1),
                &AisConfig::new(5, 200),
                &WeightRule::SQRT,
                ctx.seed,
                r,
            )?;
            if id == "aisunbiased" {
                vec![ReportRow::value(id, 0.0, 4.0, s.z_score())]
            } else {
                vec![ReportRow::value(id, 0.0, 4.0 / (r as f64).sqrt(), s.max_abs_cross_correlation())]
            }
        }
        "aisvarhat" => {
            let s = parallel::unbiasedness_study(
                &StandardNormalProblem::light_tailed(),
                &GaussianLocation::new(1),
                &AisConfig::new(5, 200),
                &WeightRule::SQRT,
                ctx.seed,
                100_000,
            )?;
            vec![ReportRow::value(id, 1.0, 0.05, s.mean_var_hat / s.empirical_variance)]
        }
        "biasdemo" => {
            let d = parallel::bias_demo(
                &StandardNormalProblem::rare_event(3.0),
                &GaussianLocation::new(1),
                &AisConfig::new(10, 50),
                10_000,
                ctx.seed,
            )?;
            vec![
                ReportRow::interval("biasdemo", f64::NEG_INFINITY, -4.0, d.z_estimated_weights()),
                ReportRow::value("biasdemo.sqrt", 0.0, 4.0, d.z_sqrt_rule()),
            ]
        }
        "rhooracle" => vec![ReportRow::value("rhooracle", 0.0, 1e-12, rho_oracle_error(ctx.seed, 1000)?)],
        other => {
            return Err(estcombine_core::Error::InvalidArgument(format!("unknown claim id {other}")));
        }
    };
    Ok(rows)
}

/// Number of `(x, K)` pairs, `x ∈ {0, 0.1, ..., 1}`, `K ≤ 1000`, where the
/// integral bounds fail to enclose the power sum (strictly inside `0 < x < 1`).
pub fn sandwich_violations() -> Result<usize> {
    let mut violations = 0;
    for j in 0..=10 {
        let x = j as f64 / 10.0;
        for k in 1..=1000 {
            let s = power_sum(x, k)?;
            let b = ineff::integral_bounds(x, k)?;
            let lower_ok = if x > 0.0 && x < 1.0 { b.lower < s } else { b.lower <= s };
            let upper_ok = if x > 0.0 { s < b.upper } else { s <= b.upper };
            if !(lower_ok && upper_ok) {
                violations += 1;
            }
        }
    }
    Ok(violations)
}

/// Largest relative gap between the closed-form `gamma` and direct summation
/// over `trials` random `(x, y, K ≤ 50)`.
pub fn gamma_oracle_error(seed: u64, trials: usize) -> Result<f64> {
    let mut g = rng::master(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let x = g.random_range(0.01..2.0);
        let y = g.random_range(0.01..2.0);
        let k = g.random_range(1..=50usize);
        let direct = |a: f64| (1..=k).map(|i| (a * i as f64).exp()).sum::<f64>();
        let brute = direct(2.0 * x - y) * direct(y) / (direct(x) * direct(x));
        let closed = ineff::gamma(x, y, k)?;
        worst = worst.max(((closed - brute) / brute).abs());
    }
    Ok(worst)
}

/// Largest relative disagreement between the three inefficiency routes:
/// `rho_custom` with square-root weights against `rho_general` on random
/// profiles, and `rho_general` against the analytic `rho` on power laws.
pub fn rho_oracle_error(seed: u64, trials: usize) -> Result<f64> {
    let mut g = rng::master(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let k = g.random_range(1..=30usize);
        let v: Vec<f64> = (0..k).map(|_| (g.random_range(-3.0..3.0f64)).exp()).collect();
        let w = make_weights(&WeightRule::SQRT, k)?;
        let general = ineff::rho_general(&v)?;
        let custom = ineff::rho_custom(&v, &w)?;
        worst = worst.max(((custom - general) / general).abs());

        let y = g.random_range(0.0..2.0);
        let analytic = ineff::rho(0.5, y, k)?;
        let profile = profile_power_law(y, k)?.sqrt_rule_ineff()?;
        worst = worst.max(((profile - analytic) / analytic).abs());
    }
    Ok(worst)
}

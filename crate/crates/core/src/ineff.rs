//! Inefficiency of deterministic weightings.
//!
//! The inefficiency of a rule is the variance of the pooled estimate it
//! produces divided by the variance of the inverse-variance-optimal pooled
//! estimate. For the power-law family, weights `∝ k^x` against true
//! variances `∝ k^{-y}` give
//!
//! ```text
//! rho_K(x | y) = (Σ i^{2x-y}) (Σ i^y) / (Σ i^x)^2
//! ```
//!
//! and for exponential weights `∝ e^{kx}` against variances `∝ e^{-ky}` the
//! analogous ratio of geometric sums, `gamma_K(x | y)`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::sum::{check_terms, compensated_sum, int_pow, PowerSumPrefix};

pub use crate::sum::power_sum;

/// Assumed interval `[lower, upper]` for an unknown power-law decay rate.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RateBounds {
    lower: f64,
    upper: f64,
}

impl RateBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) || lower < 0.0 || upper < lower {
            return Err(invalid!("rate bounds need 0 <= L <= U < inf, got L={lower}, U={upper}"));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Midpoint `(L + U) / 2`, the minimax weighting exponent.
    pub fn midpoint(&self) -> f64 {
        (self.lower + self.upper) / 2.0
    }
}

/// Working model `Var(mu_k) = tau2 * k^{-y}`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PowerLawModel {
    pub y: f64,
    pub tau2: f64,
}

impl PowerLawModel {
    pub fn new(y: f64, tau2: f64) -> Result<Self> {
        if !(y.is_finite() && y >= 0.0) {
            return Err(invalid!("decay rate must be finite and >= 0, got {y}"));
        }
        if !(tau2.is_finite() && tau2 > 0.0) {
            return Err(invalid!("tau2 must be finite and positive, got {tau2}"));
        }
        Ok(Self { y, tau2 })
    }

    pub fn variance(&self, k: usize) -> f64 {
        self.tau2 * int_pow(k, -self.y)
    }
}

/// An inefficiency value with the context it was computed in.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct IneffReport {
    pub value: f64,
    pub k: usize,
    pub rule_exponent: f64,
    pub model: String,
}

impl IneffReport {
    /// Inefficiency of weights `∝ k^x` under `model`.
    pub fn power_law(x: f64, model: &PowerLawModel, k: usize) -> Result<Self> {
        Ok(Self {
            value: rho(x, model.y, k)?,
            k,
            rule_exponent: x,
            model: format!("power-law y={} tau2={}", model.y, model.tau2),
        })
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(invalid!("K must be at least 1"));
    }
    check_terms(k)
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(invalid!("{name} must be finite, got {v}"));
    }
    Ok(())
}

#[inline]
fn ratio(a: f64, b: f64, c: f64) -> f64 {
    (a * b) / (c * c)
}

/// `rho_K(x | y)`: inefficiency of weights `∝ k^x` when `Var(mu_k) ∝ k^{-y}`.
pub fn rho(x: f64, y: f64, k: usize) -> Result<f64> {
    check_finite("x", x)?;
    check_finite("y", y)?;
    check_k(k)?;
    Ok(ratio(
        power_sum(2.0 * x - y, k)?,
        power_sum(y, k)?,
        power_sum(x, k)?,
    ))
}

/// `[rho_1(x|y), ..., rho_{k_max}(x|y)]` in one pass over running sums.
pub fn rho_prefix(x: f64, y: f64, k_max: usize) -> Result<Vec<f64>> {
    check_finite("x", x)?;
    check_finite("y", y)?;
    check_k(k_max)?;
    let a = PowerSumPrefix::new(2.0 * x - y);
    let b = PowerSumPrefix::new(y);
    let c = PowerSumPrefix::new(x);
    Ok(a.zip(b)
        .zip(c)
        .take(k_max)
        .map(|((a, b), c)| ratio(a, b, c))
        .collect())
}

fn check_variances(variances: &[f64]) -> Result<()> {
    if variances.is_empty() {
        return Err(invalid!("variance profile is empty"));
    }
    check_terms(variances.len())?;
    if let Some((k, v)) = variances
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && **v > 0.0))
    {
        return Err(invalid!("variance {} at k={} is not finite and positive", v, k + 1));
    }
    Ok(())
}

/// `Σ w_k^2 v_k`, the variance of a pooled estimate with weights `w`.
pub fn weighted_variance(weights: &[f64], variances: &[f64]) -> Result<f64> {
    if weights.len() != variances.len() {
        return Err(invalid!(
            "{} weights for {} variances",
            weights.len(),
            variances.len()
        ));
    }
    Ok(compensated_sum(
        weights.iter().zip(variances).map(|(w, v)| w * w * v),
    ))
}

/// Variance of the inverse-variance-optimal pooled estimate, `1 / Σ v_k^{-1}`.
pub fn optimal_variance(variances: &[f64]) -> Result<f64> {
    check_variances(variances)?;
    Ok(1.0 / compensated_sum(variances.iter().map(|v| 1.0 / v)))
}

/// Inefficiency of the square-root rule against an arbitrary variance
/// profile: `(Σ k v_k)(Σ 1/v_k) / (Σ k^{1/2})^2`.
pub fn rho_general(variances: &[f64]) -> Result<f64> {
    check_variances(variances)?;
    let k = variances.len();
    let weighted = compensated_sum(variances.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v));
    let precision = compensated_sum(variances.iter().map(|v| 1.0 / v));
    Ok(ratio(weighted, precision, power_sum(0.5, k)?))
}

/// Inefficiency of explicit weights against a variance profile:
/// `(Σ w_k^2 v_k)(Σ 1/v_k)`. The weights are taken as given and should sum
/// to one.
pub fn rho_custom(variances: &[f64], weights: &[f64]) -> Result<f64> {
    check_variances(variances)?;
    let num = weighted_variance(weights, variances)?;
    Ok(num * compensated_sum(variances.iter().map(|v| 1.0 / v)))
}

/// Supremum of `rho_K(x | y)` over `y` in a rate interval.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SupRho {
    pub value: f64,
    /// The endpoint of the interval attaining the supremum.
    pub argmax_y: f64,
}

/// `sup_{L <= y <= U} rho_K(x | y)`.
///
/// `rho` is convex in `y`, so the supremum sits at an endpoint. Requires
/// `L <= x <= U`; when `x` is the midpoint both endpoints tie and `U` is
/// reported.
pub fn sup_rho_over_y(x: f64, bounds: &RateBounds, k: usize) -> Result<SupRho> {
    check_finite("x", x)?;
    if x < bounds.lower || x > bounds.upper {
        return Err(invalid!(
            "x={x} lies outside the rate interval [{}, {}]",
            bounds.lower,
            bounds.upper
        ));
    }
    let at_lower = rho(x, bounds.lower, k)?;
    let at_upper = rho(x, bounds.upper, k)?;
    let value = at_lower.max(at_upper);
    let argmax_y = if x == bounds.midpoint() || at_upper >= at_lower {
        bounds.upper
    } else {
        bounds.lower
    };
    Ok(SupRho { value, argmax_y })
}

/// `lim_{K→∞} rho_K(M | U) = (M+1)^2 / ((L+1)(U+1))`.
pub fn asymptotic_ineff(bounds: &RateBounds) -> f64 {
    let m = bounds.midpoint();
    (m + 1.0) * (m + 1.0) / ((bounds.lower + 1.0) * (bounds.upper + 1.0))
}

/// Checks that `rho_K(M | U)` never decreases for `K = 1..k_max`.
pub fn rho_midpoint_nondecreasing(bounds: &RateBounds, k_max: usize) -> Result<bool> {
    let values = rho_prefix(bounds.midpoint(), bounds.upper, k_max)?;
    Ok(values.windows(2).all(|w| w[1] >= w[0]))
}

/// Below this `|a|` the geometric sum `Σ e^{ai}` is replaced by `K`.
const GEOMETRIC_DEGENERATE: f64 = 1e-9;

/// `ln(e^z - 1)` for `z > 0`, `ln(1 - e^z)` for `z < 0`.
fn ln_abs_expm1(z: f64) -> f64 {
    if z > 0.0 {
        if z > 30.0 {
            z + libm::log1p(-libm::exp(-z))
        } else {
            libm::log(libm::expm1(z))
        }
    } else if z < -core::f64::consts::LN_2 {
        libm::log1p(-libm::exp(z))
    } else {
        libm::log(-libm::expm1(z))
    }
}

/// `ln Σ_{i=1}^{K} e^{a i} = ln[e^a (e^{Ka} - 1) / (e^a - 1)]`.
pub(crate) fn ln_geometric_sum(a: f64, k: usize) -> f64 {
    if a.abs() < GEOMETRIC_DEGENERATE {
        return libm::log(k as f64);
    }
    a + ln_abs_expm1(k as f64 * a) - ln_abs_expm1(a)
}

/// `gamma_K(x | y)`: inefficiency of weights `∝ e^{kx}` when
/// `Var(mu_k) ∝ e^{-ky}`, evaluated from the closed form in log space.
pub fn gamma(x: f64, y: f64, k: usize) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) || !(y.is_finite() && y > 0.0) {
        return Err(invalid!("gamma needs finite x > 0 and y > 0, got x={x}, y={y}"));
    }
    if k == 0 {
        return Err(invalid!("K must be at least 1"));
    }
    let ln = ln_geometric_sum(2.0 * x - y, k) + ln_geometric_sum(y, k) - 2.0 * ln_geometric_sum(x, k);
    Ok(libm::exp(ln))
}

/// The `x → ∞` (last-iterate) limit of `gamma_K(x | y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LastIterateLimit {
    /// `e^y (1 - e^{-Ky}) / (e^y - 1)`.
    pub limit: f64,
    /// `e^y / (e^y - 1)`, valid for every `K`.
    pub bound: f64,
}

pub fn gamma_last_iterate_limit(y: f64, k: usize) -> Result<LastIterateLimit> {
    if !(y.is_finite() && y > 0.0) {
        return Err(invalid!("y must be finite and positive, got {y}"));
    }
    if k == 0 {
        return Err(invalid!("K must be at least 1"));
    }
    let denom = -libm::expm1(-y);
    Ok(LastIterateLimit {
        limit: -libm::expm1(-(k as f64) * y) / denom,
        bound: 1.0 / denom,
    })
}

/// Integral bounds on `Σ_{i=1}^K i^x` for `0 <= x <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct IntegralBounds {
    /// `∫_{1/2}^{K+1/2} v^x dv`, from concavity of `v^x`.
    pub lower: f64,
    /// `∫_1^{K+1} v^x dv`.
    pub upper: f64,
}

pub fn integral_bounds(x: f64, k: usize) -> Result<IntegralBounds> {
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid!("integral bounds need 0 <= x <= 1, got {x}"));
    }
    if k == 0 {
        return Err(invalid!("K must be at least 1"));
    }
    let p = x + 1.0;
    let kf = k as f64;
    Ok(IntegralBounds {
        lower: (libm::pow(kf + 0.5, p) - libm::pow(0.5, p)) / p,
        upper: (libm::pow(kf + 1.0, p) - 1.0) / p,
    })
}

/// `rho_K(1/2 | 1) = [K^2 (K+1) / 2] / S_K^2` with `S_K = Σ i^{1/2}`.
pub fn rho_half_given_one(k: usize) -> Result<f64> {
    check_k(k)?;
    let kf = k as f64;
    let s = power_sum(0.5, k)?;
    Ok(kf * kf * (kf + 1.0) / 2.0 / (s * s))
}

/// Outcome of the growth check on `rho_K(1/2 | 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCheck {
    pub holds: bool,
    /// `ratios[j] = rho_{j+2}(1/2|1) / rho_{j+1}(1/2|1)`.
    pub ratios: Vec<f64>,
}

/// Checks `rho_{K+1}(1/2|1) > rho_K(1/2|1)` for `1 <= K < k_max`.
///
/// The ratio is evaluated directly as
/// `(K+1)(K+2) S_K^2 / (K^2 (S_K + sqrt(K+1))^2)`, which keeps it accurate
/// where it is within `1e-9` of one.
pub fn rho_halfrule_monotone_check(k_max: usize) -> Result<MonotoneCheck> {
    if k_max < 2 {
        return Err(invalid!("K_max must be at least 2"));
    }
    check_terms(k_max)?;
    let mut ratios = Vec::with_capacity(k_max - 1);
    let mut s = PowerSumPrefix::new(0.5);
    for k in 1..k_max {
        let sk = s.next().unwrap_or_default();
        let kf = k as f64;
        let grown = sk + libm::sqrt(kf + 1.0);
        let ratio = (kf + 1.0) * (kf + 2.0) * (sk / grown) * (sk / grown) / (kf * kf);
        ratios.push(ratio);
    }
    let holds = ratios.iter().all(|r| *r > 1.0);
    Ok(MonotoneCheck { holds, ratios })
}

/// Grid search for the minimax power-law exponent over `y ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxScan {
    /// Grid minimizer; `None` when `K = 1`, where every exponent is equally good.
    pub best_x: Option<f64>,
    pub sup_values: Vec<f64>,
}

impl MinimaxScan {
    pub fn is_degenerate(&self) -> bool {
        self.best_x.is_none()
    }
}

pub fn minimax_scan(k: usize, x_grid: &[f64]) -> Result<MinimaxScan> {
    check_k(k)?;
    if x_grid.is_empty() {
        return Err(invalid!("x grid is empty"));
    }
    if let Some(x) = x_grid.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(invalid!("grid value {x} lies outside [0, 1]"));
    }
    let unit = RateBounds::new(0.0, 1.0)?;
    let sup_values = x_grid
        .iter()
        .map(|x| sup_rho_over_y(*x, &unit, k).map(|s| s.value))
        .collect::<Result<Vec<_>>>()?;
    let best_x = if k == 1 {
        None
    } else {
        let mut best = 0;
        for (i, v) in sup_values.iter().enumerate() {
            if *v < sup_values[best] {
                best = i;
            }
        }
        Some(x_grid[best])
    };
    Ok(MinimaxScan { best_x, sup_values })
}

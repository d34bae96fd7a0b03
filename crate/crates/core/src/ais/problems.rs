//! Packaged synthetic problems with known means, and the Gaussian location
//! proposal family.

use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::{Problem, ProposalFamily};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal CDF, `Φ(z) = erfc(-z / sqrt 2) / 2`.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}

fn std_normal_log_pdf(x: &[f64]) -> f64 {
    x.iter().map(|v| -0.5 * v * v - LN_SQRT_2PI).sum()
}

/// Integrands packaged with a standard normal target.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Integrand {
    /// `f(x) = x^2`, `μ = 1`.
    Square,
    /// `f(x) = 1{x > t}`, `μ = Φ(-t)`.
    Tail { t: f64 },
    /// `f(x) = x`, `μ = 0`.
    Identity,
    /// `f(x) = c`, `μ = c`.
    Constant(f64),
}

/// One-dimensional problem with `p = N(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StandardNormalProblem {
    pub integrand: Integrand,
}

impl StandardNormalProblem {
    /// Light-tailed problem: `E[x^2] = 1`.
    pub fn light_tailed() -> Self {
        Self {
            integrand: Integrand::Square,
        }
    }

    /// Rare event `P(x > t)`.
    pub fn rare_event(t: f64) -> Self {
        Self {
            integrand: Integrand::Tail { t },
        }
    }

    pub fn identity() -> Self {
        Self {
            integrand: Integrand::Identity,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            integrand: Integrand::Constant(c),
        }
    }
}

impl Problem for StandardNormalProblem {
    fn name(&self) -> &str {
        match self.integrand {
            Integrand::Square => "x2",
            Integrand::Tail { .. } => "rare",
            Integrand::Identity => "identity",
            Integrand::Constant(_) => "constant",
        }
    }

    fn dimension(&self) -> usize {
        1
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        std_normal_log_pdf(x)
    }

    fn integrand(&self, x: &[f64]) -> f64 {
        match self.integrand {
            Integrand::Square => x[0] * x[0],
            Integrand::Tail { t } => {
                if x[0] > t {
                    1.0
                } else {
                    0.0
                }
            }
            Integrand::Identity => x[0],
            Integrand::Constant(c) => c,
        }
    }

    fn true_mean(&self) -> f64 {
        match self.integrand {
            Integrand::Square => 1.0,
            Integrand::Tail { t } => normal_cdf(-t),
            Integrand::Identity => 0.0,
            Integrand::Constant(c) => c,
        }
    }
}

/// `q(·; θ) = N(θ, I)`. Positive everywhere, so the support condition holds
/// for every `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GaussianLocation {
    pub dimension: usize,
}

impl GaussianLocation {
    pub fn new(dimension: usize) -> Self {
        Self { dimension }
    }
}

impl ProposalFamily for GaussianLocation {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn initial(&self) -> Vec<f64> {
        vec![0.0; self.dimension]
    }

    fn log_density(&self, x: &[f64], theta: &[f64]) -> f64 {
        x.iter()
            .zip(theta)
            .map(|(v, m)| {
                let d = v - m;
                -0.5 * d * d - LN_SQRT_2PI
            })
            .sum()
    }

    fn sample(&self, theta: &[f64], rng: &mut dyn RngCore, out: &mut [f64]) {
        for (o, m) in out.iter_mut().zip(theta) {
            let z: f64 = StandardNormal.sample(rng);
            *o = m + z;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_tail_values() {
        assert!((normal_cdf(-3.0) - 1.349_898_031_630_094_6e-3).abs() < 1e-15);
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert_eq!(StandardNormalProblem::rare_event(3.0).true_mean(), normal_cdf(-3.0));
    }

    #[test]
    fn proposal_at_origin_matches_target() {
        let p = StandardNormalProblem::light_tailed();
        let q = GaussianLocation::new(1);
        for x in [-3.0, -0.2, 0.0, 1.7] {
            assert_eq!(p.log_density(&[x]), q.log_density(&[x], &[0.0]));
        }
    }
}

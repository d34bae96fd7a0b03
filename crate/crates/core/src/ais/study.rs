//! Replication studies: unbiasedness of deterministic pooling and the bias of
//! pooling with estimated inverse-variance weights.

use alloc::vec;
use alloc::vec::Vec;

use super::{run_replication, AdaptiveRun, AisConfig, Problem, ProposalFamily};
use crate::error::{invalid, Result};
use crate::sum::compensated_sum;
use crate::weights::{combine, combine_with, CombinedEstimate, StageEstimate, WeightRule, Weights};

/// Sample mean and unbiased sample variance.
pub fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    (mean, ss / (n - 1.0))
}

/// Weights `∝ 1 / var_hat_k`.
///
/// A stage with `var_hat = 0` gets the largest finite weight among the other
/// stages; when every stage has `var_hat = 0` the weights are uniform.
pub fn inverse_variance_weights(stages: &[StageEstimate]) -> Result<Weights> {
    if stages.is_empty() {
        return Err(invalid!("at least one stage is required"));
    }
    let raw: Vec<f64> = stages
        .iter()
        .map(|s| if s.var_hat > 0.0 { 1.0 / s.var_hat } else { f64::NAN })
        .collect();
    let largest = raw
        .iter()
        .copied()
        .filter(|w| w.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let filled = if largest == f64::NEG_INFINITY {
        vec![1.0; raw.len()]
    } else {
        raw.into_iter()
            .map(|w| if w.is_finite() { w } else { largest })
            .collect()
    };
    crate::weights::make_weights(&WeightRule::Custom(filled), stages.len())
}

/// Pooling with estimated inverse-variance weights. Shown only as a foil: the
/// weights are random and correlated with the stage means, so the pooled
/// estimate is biased.
pub fn combine_inverse_variance(stages: &[StageEstimate]) -> Result<CombinedEstimate> {
    combine_with(stages, inverse_variance_weights(stages)?)
}

/// Runs `replications` independent adaptive runs, replication `r` on stream
/// `r` of `seed`.
pub fn replicate<P: Problem + ?Sized, F: ProposalFamily + ?Sized>(
    problem: &P,
    family: &F,
    config: &AisConfig,
    seed: u64,
    replications: u64,
) -> Result<Vec<AdaptiveRun>> {
    (0..replications)
        .map(|r| run_replication(problem, family, config, seed, r))
        .collect()
}

/// Empirical check that a deterministic rule pools without bias and that
/// the pooled variance estimate is unbiased.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct UnbiasednessStudy {
    pub replications: usize,
    pub true_mean: f64,
    /// Mean of the pooled estimates.
    pub mean: f64,
    /// Standard error of `mean`.
    pub std_error: f64,
    /// Sample variance of the pooled estimates.
    pub empirical_variance: f64,
    /// Mean of the pooled variance estimates.
    pub mean_var_hat: f64,
    /// Row-major `K × K` correlation matrix of the stage estimates.
    pub stage_correlations: Vec<f64>,
    pub k: usize,
}

impl UnbiasednessStudy {
    pub fn from_runs(runs: &[AdaptiveRun], rule: &WeightRule, true_mean: f64) -> Result<Self> {
        if runs.len() < 2 {
            return Err(invalid!("need at least two replications"));
        }
        let k = runs[0].k;
        let pooled = runs
            .iter()
            .map(|r| combine(&r.stages, rule))
            .collect::<Result<Vec<_>>>()?;
        let mus: Vec<f64> = pooled.iter().map(|c| c.mu_hat).collect();
        let (mean, variance) = mean_and_variance(&mus);
        let mean_var_hat = compensated_sum(pooled.iter().map(|c| c.var_hat)) / runs.len() as f64;

        let columns: Vec<Vec<f64>> = (0..k)
            .map(|j| runs.iter().map(|r| r.stages[j].mu_hat).collect())
            .collect();
        let moments: Vec<(f64, f64)> = columns.iter().map(|c| mean_and_variance(c)).collect();
        let n = runs.len() as f64;
        let mut stage_correlations = vec![0.0; k * k];
        for a in 0..k {
            for b in 0..k {
                let cov = compensated_sum(
                    columns[a]
                        .iter()
                        .zip(&columns[b])
                        .map(|(x, y)| (x - moments[a].0) * (y - moments[b].0)),
                ) / (n - 1.0);
                stage_correlations[a * k + b] = cov / libm::sqrt(moments[a].1 * moments[b].1);
            }
        }
        Ok(Self {
            replications: runs.len(),
            true_mean,
            mean,
            std_error: libm::sqrt(variance / n),
            empirical_variance: variance,
            mean_var_hat,
            stage_correlations,
            k,
        })
    }

    /// `(mean - μ) / std_error`.
    pub fn z_score(&self) -> f64 {
        (self.mean - self.true_mean) / self.std_error
    }

    pub fn correlation(&self, a: usize, b: usize) -> f64 {
        self.stage_correlations[a * self.k + b]
    }

    /// Largest `|corr(mu_a, mu_b)|` over `a < b`.
    pub fn max_abs_cross_correlation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..self.k {
            for b in a + 1..self.k {
                worst = worst.max(self.correlation(a, b).abs());
            }
        }
        worst
    }

    /// `|mean var_hat / empirical variance - 1|`.
    pub fn var_hat_relative_error(&self) -> f64 {
        (self.mean_var_hat / self.empirical_variance - 1.0).abs()
    }
}

/// Empirical bias of estimated-weight pooling against the square-root rule.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BiasDemo {
    pub replications: usize,
    pub true_mean: f64,
    pub bias_estimated_weights: f64,
    pub se_estimated_weights: f64,
    pub bias_sqrt_rule: f64,
    pub se_sqrt_rule: f64,
}

impl BiasDemo {
    pub fn from_runs(runs: &[AdaptiveRun], true_mean: f64) -> Result<Self> {
        if runs.len() < 2 {
            return Err(invalid!("need at least two replications"));
        }
        let mut estimated = Vec::with_capacity(runs.len());
        let mut sqrt_rule = Vec::with_capacity(runs.len());
        for r in runs {
            estimated.push(combine_inverse_variance(&r.stages)?.mu_hat - true_mean);
            sqrt_rule.push(combine(&r.stages, &WeightRule::SQRT)?.mu_hat - true_mean);
        }
        let n = runs.len() as f64;
        let (be, ve) = mean_and_variance(&estimated);
        let (bs, vs) = mean_and_variance(&sqrt_rule);
        Ok(Self {
            replications: runs.len(),
            true_mean,
            bias_estimated_weights: be,
            se_estimated_weights: libm::sqrt(ve / n),
            bias_sqrt_rule: bs,
            se_sqrt_rule: libm::sqrt(vs / n),
        })
    }

    /// Bias of estimated weighting in standard errors.
    pub fn z_estimated_weights(&self) -> f64 {
        z(self.bias_estimated_weights, self.se_estimated_weights)
    }

    pub fn z_sqrt_rule(&self) -> f64 {
        z(self.bias_sqrt_rule, self.se_sqrt_rule)
    }
}

fn z(bias: f64, se: f64) -> f64 {
    if se == 0.0 {
        if bias == 0.0 {
            0.0
        } else {
            bias.signum() * f64::INFINITY
        }
    } else {
        bias / se
    }
}

/// Sequential driver for the estimated-weight bias comparison.
pub fn estimated_weight_bias_demo<P: Problem + ?Sized, F: ProposalFamily + ?Sized>(
    problem: &P,
    family: &F,
    config: &AisConfig,
    replications: u64,
    seed: u64,
) -> Result<BiasDemo> {
    if replications < 100 {
        return Err(invalid!("bias demo needs at least 100 replications"));
    }
    let runs = replicate(problem, family, config, seed, replications)?;
    BiasDemo::from_runs(&runs, problem.true_mean())
}

/// Asymptotic floor `4 ε^2 (1-ε)^2` on `n Var` of any self-normalized
/// estimate of an event probability `ε`.
pub fn self_normalized_floor(epsilon: f64) -> f64 {
    4.0 * epsilon * epsilon * (1.0 - epsilon) * (1.0 - epsilon)
}

//! A small adaptive importance sampler.
//!
//! Stage `k` draws `n` fresh points from `q(·; θ_k)` and reports the ordinary
//! importance-sampling mean together with an unbiased estimate of its
//! variance. Between stages the proposal location is moved by a
//! cross-entropy step computed from the historical points. Conditionally on
//! the past, each stage estimate is unbiased, which makes the stage estimates
//! uncorrelated and lets any deterministic weighting pool them without bias.

mod problems;
mod study;

use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use crate::error::{invalid, Error, Result};
use crate::rng;
use crate::sum::{compensated_sum, NeumaierSum};
use crate::weights::StageEstimate;

pub use problems::{normal_cdf, GaussianLocation, Integrand, StandardNormalProblem};
pub use study::{
    combine_inverse_variance, estimated_weight_bias_demo, inverse_variance_weights, mean_and_variance,
    replicate, self_normalized_floor, BiasDemo, UnbiasednessStudy,
};

/// Target `p`, integrand `f` and the exact `μ = ∫ f p`.
pub trait Problem {
    fn name(&self) -> &str;
    fn dimension(&self) -> usize;
    /// `ln p(x)`.
    fn log_density(&self, x: &[f64]) -> f64;
    fn integrand(&self, x: &[f64]) -> f64;
    fn true_mean(&self) -> f64;
}

/// A parametric proposal family `q(·; θ)`.
pub trait ProposalFamily {
    fn dimension(&self) -> usize;
    /// `θ_1`.
    fn initial(&self) -> Vec<f64>;
    /// `ln q(x; θ)`.
    fn log_density(&self, x: &[f64], theta: &[f64]) -> f64;
    fn sample(&self, theta: &[f64], rng: &mut dyn RngCore, out: &mut [f64]);
}

/// Which past points drive the cross-entropy update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum AdaptMode {
    /// Every point drawn so far.
    #[default]
    AllHistory,
    /// Only the most recent stage.
    LastStage,
    /// Never move the proposal.
    Frozen,
}

/// Stage count, per-stage sample size and adaptation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AisConfig {
    pub k: usize,
    pub n: usize,
    pub mode: AdaptMode,
}

impl AisConfig {
    pub fn new(k: usize, n: usize) -> Self {
        Self {
            k,
            n,
            mode: AdaptMode::AllHistory,
        }
    }

    pub fn with_mode(mut self, mode: AdaptMode) -> Self {
        self.mode = mode;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(invalid!("K must be at least 1"));
        }
        if self.n < 2 {
            return Err(invalid!("n must be at least 2 to estimate a variance"));
        }
        Ok(())
    }
}

/// One stage's points, their weighted integrand values `f p / q` and the
/// resulting estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct StageDraw {
    pub theta: Vec<f64>,
    /// Row-major `n × d` sample points.
    pub points: Vec<f64>,
    pub values: Vec<f64>,
    pub estimate: StageEstimate,
}

impl StageDraw {
    pub fn dimension(&self) -> usize {
        self.theta.len()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dimension();
        &self.points[i * d..(i + 1) * d]
    }
}

fn check_dims<P: Problem + ?Sized, F: ProposalFamily + ?Sized>(
    problem: &P,
    family: &F,
    theta: &[f64],
) -> Result<usize> {
    let d = problem.dimension();
    if family.dimension() != d || theta.len() != d {
        return Err(invalid!(
            "dimension mismatch: problem {d}, family {}, theta {}",
            family.dimension(),
            theta.len()
        ));
    }
    Ok(d)
}

/// `f(x) p(x) / q(x; θ)` with the density ratio formed in log space.
fn weighted_value<P: Problem + ?Sized, F: ProposalFamily + ?Sized>(
    problem: &P,
    family: &F,
    x: &[f64],
    theta: &[f64],
) -> Result<f64> {
    let f = problem.integrand(x);
    let log_p = problem.log_density(x);
    if f == 0.0 || log_p == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let log_q = family.log_density(x, theta);
    if log_q == f64::NEG_INFINITY {
        return Err(Error::SupportViolation);
    }
    Ok(f * libm::exp(log_p - log_q))
}

fn draw_points<F: ProposalFamily + ?Sized>(
    family: &F,
    theta: &[f64],
    n: usize,
    d: usize,
    rng: &mut dyn RngCore,
) -> Vec<f64> {
    let mut points = vec![0.0; n * d];
    for chunk in points.chunks_exact_mut(d.max(1)) {
        family.sample(theta, rng, chunk);
    }
    points
}

/// Draws `n` points from `q(·; θ)` and forms the ordinary importance
/// sampling estimate, keeping the points for the adaptation step.
pub fn draw_stage<P: Problem + ?Sized, F: ProposalFamily + ?Sized>(
    problem: &P,
    family: &F,
    theta: &[f64],
    n: usize,
    rng: &mut dyn RngCore,
) -> Result<StageDraw> {
    if n < 2 {
        return Err(invalid!("n must be at least 2 to estimate a variance"));
    }
    let d = check_dims(problem, family, theta)?;
    let points = draw_points(family, theta, n, d, rng);
    let values = points
        .chunks_exact(d.max(1))
        .map(|x| weighted_value(problem, family, x, theta))
        .collect::<Result<Vec<_>>>()?;
    let nf = n as f64;
    let mu_hat = compensated_sum(values.iter().copied()) / nf;
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let var_hat = if scale == 0.0 {
        0.0
    } else {
        let ss = compensated_sum(values.iter().map(|v| {
            let d = (v - mu_hat) / scale;
            d * d
        }));
        ss / (nf * (nf - 1.0)) * scale * scale
    };
    Ok(StageDraw {
        theta: theta.to_vec(),
        points,
        values,
        estimate: StageEstimate { mu_hat, var_hat, n },
    })
}

/// Ordinary importance-sampling stage estimate `(1/n) Σ f p / q` with the
/// variance of that mean estimated by `Σ (v_i - mean)^2 / (n (n-1))`.
pub fn stage_estimate<P: Problem + ?Sized, F: ProposalFamily + ?Sized>(
    problem: &P,
    family: &F,
    theta: &[f64],
    n: usize,
    rng: &mut dyn RngCore,
) -> Result<StageEstimate> {
    draw_stage(problem, family, theta, n, rng).map(|d| d.estimate)
}

/// Self-normalized stage estimate `Σ w_i f_i / Σ w_i` with `w = p / q`.
///
/// The variance is the delta-method estimate `Σ w̄_i^2 (f_i - mean)^2`. This
/// estimator carries an `O(1/n)` bias and is not valid input for the unbiased
/// pooling guarantees.
pub fn stage_estimate_self_normalized<P: Problem + ?Sized, F: ProposalFamily + ?Sized>(
    problem: &P,
    family: &F,
    theta: &[f64],
    n: usize,
    rng: &mut dyn RngCore,
) -> Result<StageEstimate> {
    if n < 2 {
        return Err(invalid!("n must be at least 2 to estimate a variance"));
    }
    let d = check_dims(problem, family, theta)?;
    let points = draw_points(family, theta, n, d, rng);
    let mut log_w = Vec::with_capacity(n);
    let mut f = Vec::with_capacity(n);
    for x in points.chunks_exact(d.max(1)) {
        let log_p = problem.log_density(x);
        let log_q = family.log_density(x, theta);
        if log_q == f64::NEG_INFINITY && log_p > f64::NEG_INFINITY {
            return Err(Error::SupportViolation);
        }
        log_w.push(if log_p == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            log_p - log_q
        });
        f.push(problem.integrand(x));
    }
    let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(Error::DegenerateSample);
    }
    let w: Vec<f64> = log_w.iter().map(|l| libm::exp(l - top)).collect();
    let total = compensated_sum(w.iter().copied());
    let mu_hat = compensated_sum(w.iter().zip(&f).map(|(w, f)| w * f)) / total;
    let var_hat = compensated_sum(w.iter().zip(&f).map(|(w, f)| {
        let wb = w / total;
        wb * wb * (f - mu_hat) * (f - mu_hat)
    }));
    Ok(StageEstimate { mu_hat, var_hat, n })
}

/// Running sums for the cross-entropy location update.
#[derive(Debug, Clone, PartialEq)]
pub struct CeMoments {
    weight: NeumaierSum,
    first: Vec<NeumaierSum>,
}

impl CeMoments {
    pub fn new(dimension: usize) -> Self {
        Self {
            weight: NeumaierSum::new(),
            first: vec![NeumaierSum::new(); dimension],
        }
    }

    /// Adds a stage's points with weights `u_i = |f(x_i)| p(x_i) / q(x_i; θ_stage)`.
    pub fn absorb(&mut self, draw: &StageDraw) {
        for (i, v) in draw.values.iter().enumerate() {
            let u = v.abs();
            if u == 0.0 {
                continue;
            }
            self.weight.add(u);
            for (m, x) in self.first.iter_mut().zip(draw.point(i)) {
                m.add(u * x);
            }
        }
    }

    /// `Σ u_i x_i / Σ u_i`, or `current` when no point carries weight.
    pub fn next_theta(&self, current: &[f64]) -> Vec<f64> {
        let w = self.weight.value();
        if w > 0.0 && w.is_finite() {
            self.first.iter().map(|m| m.value() / w).collect()
        } else {
            current.to_vec()
        }
    }
}

/// Cross-entropy update for a location family: the `u`-weighted mean of every
/// point in `history`, falling back to `current` when no point carries weight.
pub fn adapt_step(history: &[StageDraw], current: &[f64]) -> Vec<f64> {
    let mut moments = CeMoments::new(current.len());
    for draw in history {
        moments.absorb(draw);
    }
    moments.next_theta(current)
}

/// A completed adaptive run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AdaptiveRun {
    pub stages: Vec<StageEstimate>,
    /// `θ_1, ..., θ_K`, the parameters each stage sampled with.
    pub thetas: Vec<Vec<f64>>,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
}

impl AdaptiveRun {
    /// Total sample size `N = nK`.
    pub fn total_samples(&self) -> usize {
        self.n * self.k
    }
}

/// Runs `K` adaptive stages from a generator seeded with `seed`.
pub fn run_adaptive<P: Problem + ?Sized, F: ProposalFamily + ?Sized>(
    problem: &P,
    family: &F,
    config: &AisConfig,
    seed: u64,
) -> Result<AdaptiveRun> {
    run_adaptive_with(problem, family, config, seed, &mut rng::master(seed))
}

/// Replication `index` of a study keyed by `seed`, drawn from its own
/// counter-based stream.
pub fn run_replication<P: Problem + ?Sized, F: ProposalFamily + ?Sized>(
    problem: &P,
    family: &F,
    config: &AisConfig,
    seed: u64,
    index: u64,
) -> Result<AdaptiveRun> {
    run_adaptive_with(problem, family, config, seed, &mut rng::stream(seed, index))
}

fn run_adaptive_with<P: Problem + ?Sized, F: ProposalFamily + ?Sized>(
    problem: &P,
    family: &F,
    config: &AisConfig,
    seed: u64,
    rng: &mut dyn RngCore,
) -> Result<AdaptiveRun> {
    config.validate()?;
    let mut theta = family.initial();
    let mut moments = CeMoments::new(theta.len());
    let mut stages = Vec::with_capacity(config.k);
    let mut thetas = Vec::with_capacity(config.k);
    for _ in 0..config.k {
        let draw = draw_stage(problem, family, &theta, config.n, rng)?;
        stages.push(draw.estimate);
        let next = match config.mode {
            AdaptMode::AllHistory => {
                moments.absorb(&draw);
                moments.next_theta(&theta)
            }
            AdaptMode::LastStage => adapt_step(core::slice::from_ref(&draw), &theta),
            AdaptMode::Frozen => theta.clone(),
        };
        thetas.push(core::mem::replace(&mut theta, next));
    }
    Ok(AdaptiveRun {
        stages,
        thetas,
        n: config.n,
        k: config.k,
        seed,
    })
}

//! Data-parallel drivers. Every driver returns exactly what its sequential
//! counterpart in `estcombine-core` returns, for any worker count.

use estcombine_core::ais::{self, AdaptiveRun, AisConfig, BiasDemo, Problem, ProposalFamily, UnbiasednessStudy};
use estcombine_core::varmodels::{sweep_convex_range, ConvexDecreasingSampler, SweepAccumulator};
use estcombine_core::{Error, Result, SweepResult, WeightRule};
use rayon::prelude::*;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "ESTCOMBINE_THREADS";

/// Samples per work item in convex sweeps.
const SWEEP_CHUNK: u64 = 8192;

/// Builds a pool honouring `ESTCOMBINE_THREADS` (unset or 0 means rayon's default).
pub fn pool_from_env() -> rayon::ThreadPool {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    pool_with_threads(threads)
}

pub fn pool_with_threads(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool construction")
}

/// Parallel `sweep_convex`; bit-identical to the sequential sweep.
pub fn sweep_convex(k: usize, n_samples: u64, seed: u64, threshold: f64) -> Result<SweepResult> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    let sampler = ConvexDecreasingSampler::new(k, seed)?;
    let chunks = n_samples.div_ceil(SWEEP_CHUNK);
    let acc = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * SWEEP_CHUNK;
            let end = (start + SWEEP_CHUNK).min(n_samples);
            sweep_convex_range(&sampler, start..end, threshold)
        })
        .try_reduce(SweepAccumulator::new, |a, b| Ok(a.merge(b)))?;
    acc.finish(&sampler, threshold)
        .ok_or_else(|| Error::InvalidArgument("sweep produced no samples".into()))
}

/// Parallel `ais::replicate`; runs come back in replication order.
pub fn replicate<P, F>(
    problem: &P,
    family: &F,
    config: &AisConfig,
    seed: u64,
    replications: u64,
) -> Result<Vec<AdaptiveRun>>
where
    P: Problem + Sync + ?Sized,
    F: ProposalFamily + Sync + ?Sized,
{
    (0..replications)
        .into_par_iter()
        .map(|r| ais::run_replication(problem, family, config, seed, r))
        .collect()
}

pub fn unbiasedness_study<P, F>(
    problem: &P,
    family: &F,
    config: &AisConfig,
    rule: &WeightRule,
    seed: u64,
    replications: u64,
) -> Result<UnbiasednessStudy>
where
    P: Problem + Sync + ?Sized,
    F: ProposalFamily + Sync + ?Sized,
{
    let runs = replicate(problem, family, config, seed, replications)?;
    UnbiasednessStudy::from_runs(&runs, rule, problem.true_mean())
}

/// Parallel `ais::estimated_weight_bias_demo`.
pub fn bias_demo<P, F>(
    problem: &P,
    family: &F,
    config: &AisConfig,
    replications: u64,
    seed: u64,
) -> Result<BiasDemo>
where
    P: Problem + Sync + ?Sized,
    F: ProposalFamily + Sync + ?Sized,
{
    if replications < 100 {
        return Err(Error::InvalidArgument("bias demo needs at least 100 replications".into()));
    }
    let runs = replicate(problem, family, config, seed, replications)?;
    BiasDemo::from_runs(&runs, problem.true_mean())
}

#[cfg(test)]
mod tests {
    use super::*;
    use estcombine_core::ais::{GaussianLocation, StandardNormalProblem};
    use estcombine_core::varmodels;

    #[test]
    fn sweep_matches_sequential_for_any_worker_count() {
        let seq = varmodels::sweep_convex(10, 20_000, 3, 1.1).unwrap();
        for threads in [1, 3] {
            let par = pool_with_threads(threads).install(|| sweep_convex(10, 20_000, 3, 1.1).unwrap());
            assert_eq!(par, seq);
        }
    }

    #[test]
    fn replications_match_sequential() {
        let p = StandardNormalProblem::rare_event(2.0);
        let q = GaussianLocation::new(1);
        let cfg = AisConfig::new(4, 50);
        let seq = ais::replicate(&p, &q, &cfg, 9, 300).unwrap();
        let par = pool_with_threads(2).install(|| replicate(&p, &q, &cfg, 9, 300).unwrap());
        assert_eq!(par, seq);
        let demo = bias_demo(&p, &q, &cfg, 300, 9).unwrap();
        assert_eq!(demo, ais::estimated_weight_bias_demo(&p, &q, &cfg, 300, 9).unwrap());
        assert!(bias_demo(&p, &q, &cfg, 50, 9).is_err());
    }
}

//! On-disk formats: variance profiles as CSV, sweeps and AIS runs as JSON.
//!
//! CSV files use a comma delimiter, a header row, UTF-8 and LF line endings.
//! Numbers are written with Rust's shortest round-trip formatting, so reading
//! a file back yields bit-identical values.

use std::io::{Read, Write};

use estcombine_core::ais::{mean_and_variance, AdaptiveRun, BiasDemo, UnbiasednessStudy};
use estcombine_core::varmodels::PlateauSweep;
use estcombine_core::{CombinedEstimate, SweepResult, VarianceProfile};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("profile CSV: {0}")]
    Malformed(String),
    #[error(transparent)]
    Core(#[from] estcombine_core::Error),
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

/// Writes `k,variance` rows.
pub fn write_profile_csv<W: Write>(profile: &VarianceProfile, out: W) -> Result<(), FormatError> {
    let mut w = csv_writer(out);
    w.write_record(["k", "variance"])?;
    for (i, v) in profile.values().iter().enumerate() {
        w.write_record([(i + 1).to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `k,variance` CSV. Rows must be numbered `1..=K` in order.
pub fn read_profile_csv<R: Read>(input: R, label: &str) -> Result<VarianceProfile, FormatError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = r.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "k" || &headers[1] != "variance" {
        return Err(FormatError::Malformed(format!("expected header k,variance, got {headers:?}")));
    }
    let mut values = Vec::new();
    for (row, record) in r.records().enumerate() {
        let record = record?;
        let k: usize = record[0]
            .parse()
            .map_err(|_| FormatError::Malformed(format!("bad k on row {}", row + 1)))?;
        if k != row + 1 {
            return Err(FormatError::Malformed(format!("expected k={}, found {k}", row + 1)));
        }
        let v: f64 = record[1]
            .parse()
            .map_err(|_| FormatError::Malformed(format!("bad variance on row {}", row + 1)))?;
        values.push(v);
    }
    Ok(VarianceProfile::new(values, label)?)
}

/// JSON body of a convex-decreasing sweep.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ConvexSweepJson {
    #[serde(rename = "K")]
    pub k: usize,
    pub n_samples: u64,
    pub seed: u64,
    pub threshold: f64,
    pub count_exceeding: u64,
    pub worst_rho: f64,
    pub worst_profile: Vec<f64>,
}

impl From<&SweepResult> for ConvexSweepJson {
    fn from(r: &SweepResult) -> Self {
        Self {
            k: r.k,
            n_samples: r.count_total,
            seed: r.seed,
            threshold: r.threshold,
            count_exceeding: r.count_exceeding,
            worst_rho: r.worst_rho,
            worst_profile: r.worst_profile.values().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PlateauSweepJson {
    pub k1max: usize,
    pub k2max: usize,
    pub max_rho: f64,
    pub k1: usize,
    pub k2: usize,
}

impl PlateauSweepJson {
    pub fn new(k1max: usize, k2max: usize, r: &PlateauSweep) -> Self {
        Self {
            k1max,
            k2max,
            max_rho: r.max_rho,
            k1: r.k1,
            k2: r.k2,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct StageJson {
    pub k: usize,
    pub theta: Vec<f64>,
    pub mu_hat: f64,
    pub var_hat: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CombinedJson {
    pub rule: String,
    pub mu_hat: f64,
    pub var_hat: f64,
}

/// JSON body of a single adaptive run.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunJson {
    pub problem: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub n: usize,
    pub seed: u64,
    pub stages: Vec<StageJson>,
    pub combined: CombinedJson,
}

impl RunJson {
    pub fn new(problem: &str, run: &AdaptiveRun, rule: &str, combined: &CombinedEstimate) -> Self {
        Self {
            problem: problem.to_string(),
            k: run.k,
            n: run.n,
            seed: run.seed,
            stages: run
                .stages
                .iter()
                .zip(&run.thetas)
                .enumerate()
                .map(|(i, (s, theta))| StageJson {
                    k: i + 1,
                    theta: theta.clone(),
                    mu_hat: s.mu_hat,
                    var_hat: s.var_hat,
                })
                .collect(),
            combined: CombinedJson {
                rule: rule.to_string(),
                mu_hat: combined.mu_hat,
                var_hat: combined.var_hat,
            },
        }
    }
}

/// JSON body of a replication study.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ReplicationJson {
    pub problem: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub n: usize,
    pub seed: u64,
    pub replications: u64,
    pub rule: String,
    pub true_mean: f64,
    pub mean: f64,
    pub std_error: f64,
    pub z_score: f64,
    pub empirical_variance: f64,
    pub mean_var_hat: f64,
    pub max_abs_stage_correlation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias_demo: Option<BiasDemo>,
}

impl ReplicationJson {
    /// Summarizes pooled estimates from `replications` runs under one rule.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        problem: &str,
        k: usize,
        n: usize,
        seed: u64,
        rule: &str,
        true_mean: f64,
        pooled: &[CombinedEstimate],
        stages: &UnbiasednessStudy,
        bias_demo: Option<BiasDemo>,
    ) -> Self {
        let mus: Vec<f64> = pooled.iter().map(|c| c.mu_hat).collect();
        let (mean, variance) = mean_and_variance(&mus);
        let r = pooled.len() as f64;
        let std_error = (variance / r).sqrt();
        let mean_var_hat = pooled.iter().map(|c| c.var_hat).sum::<f64>() / r;
        Self {
            problem: problem.to_string(),
            k,
            n,
            seed,
            replications: pooled.len() as u64,
            rule: rule.to_string(),
            true_mean,
            mean,
            std_error,
            z_score: (mean - true_mean) / std_error,
            empirical_variance: variance,
            mean_var_hat,
            max_abs_stage_correlation: stages.max_abs_cross_correlation(),
            bias_demo,
        }
    }
}

pub fn write_json<T: Serialize, W: Write>(value: &T, mut out: W) -> Result<(), FormatError> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use estcombine::claims::{self, ClaimContext, ReportRow, Sig6};
use estcombine::formats::{self, ConvexSweepJson, PlateauSweepJson, ReplicationJson, RunJson};
use estcombine::parallel;
use estcombine_core::ais::{
    self, AdaptMode, AisConfig, GaussianLocation, Problem, StandardNormalProblem,
};
use estcombine_core::ineff::{self, RateBounds};
use estcombine_core::varmodels::{self, profile_plateau, profile_power_law, profile_transient};
use estcombine_core::{combine, CombinedEstimate, ConvexDecreasingSampler, StageEstimate, WeightRule};

#[derive(Parser)]
#[command(name = "estcombine", version, about = "Pool adaptive importance sampling stages and study the pooling rules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inefficiency of power-law weighting.
    #[command(subcommand)]
    Ineff(IneffCmd),
    /// Recompute the numeric claims and compare them with their stated values.
    Reproduce(ReproduceArgs),
    /// Worst-case sweeps over families of variance profiles.
    Sweep(SweepArgs),
    /// Run adaptive importance sampling on a Gaussian test problem.
    Ais(AisArgs),
    /// Write a variance profile as CSV.
    Profile(ProfileArgs),
}

#[derive(Subcommand)]
enum IneffCmd {
    /// rho_K(x|y) for weights k^x and variances k^-y.
    Rho {
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        #[arg(long, allow_negative_numbers = true)]
        y: f64,
        #[arg(long = "K")]
        k: usize,
    },
    /// Worst case over y in [L, U].
    Sup {
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        #[arg(long = "L", allow_negative_numbers = true)]
        lower: f64,
        #[arg(long = "U", allow_negative_numbers = true)]
        upper: f64,
        #[arg(long = "K")]
        k: usize,
    },
    /// K -> infinity inefficiency of the midpoint rule.
    Asymptotic {
        #[arg(long = "L", allow_negative_numbers = true)]
        lower: f64,
        #[arg(long = "U", allow_negative_numbers = true)]
        upper: f64,
    },
    /// Inefficiency for exponentially decaying variances.
    Gamma {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        y: f64,
        #[arg(long = "K")]
        k: usize,
    },
    /// Last-iterate inefficiency under exponential decay and its K -> infinity bound.
    LastIterate {
        #[arg(long)]
        y: f64,
        #[arg(long = "K")]
        k: usize,
    },
    /// Smallest growth ratio rho_{K+1}/rho_K of the square-root rule for K < K_max.
    Monotone {
        #[arg(long = "K-max")]
        k_max: usize,
    },
    /// Grid minimizer of the worst case over y in {0, 1}.
    Minimax {
        #[arg(long = "K")]
        k: usize,
        /// Grid spacing; the grid covers [0, 1].
        #[arg(long, default_value_t = 0.05)]
        step: f64,
    },
    /// Square-root rule inefficiency for a profile read from CSV.
    General {
        #[arg(long)]
        csv: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Table,
    Csv,
    Json,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Claim ids to run.
    ids: Vec<String>,
    #[arg(long, conflicts_with = "ids")]
    all: bool,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Profiles per convex-decreasing sweep.
    #[arg(long, default_value_t = claims::REFERENCE_SAMPLES)]
    samples: u64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    format: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Plateau,
    Convex,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    kind: SweepKind,
    #[arg(long = "K", default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 9.0 / 8.0)]
    threshold: f64,
    #[arg(long, default_value_t = 100)]
    k1max: usize,
    #[arg(long, default_value_t = 100)]
    k2max: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemKind {
    /// E[X^2] under N(0,1).
    X2,
    /// P(X > t) under N(0,1).
    Rare,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum RuleKind {
    Sqrt,
    Uniform,
    Last,
    /// Estimated inverse-variance weights.
    Invvar,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeKind {
    All,
    Last,
    Frozen,
}

#[derive(Args)]
struct AisArgs {
    #[arg(long, value_enum)]
    problem: ProblemKind,
    /// Threshold for the rare-event problem.
    #[arg(long, default_value_t = 3.0)]
    t: f64,
    #[arg(long = "K")]
    k: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value_t = RuleKind::Sqrt)]
    rule: RuleKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent replications; 1 reports the single run.
    #[arg(long, default_value_t = 1)]
    replications: u64,
    /// Points that drive the proposal update.
    #[arg(long, value_enum, default_value_t = ModeKind::All)]
    mode: ModeKind,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileKind {
    PowerLaw,
    Plateau,
    Transient,
    Convex,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long, value_enum)]
    kind: ProfileKind,
    #[arg(long = "K", default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    y: f64,
    #[arg(long, default_value_t = 5)]
    k1: usize,
    #[arg(long, default_value_t = 5)]
    k2: usize,
    /// Transient profile: `flat` stages at variance 1, then K - flat at `tail`.
    #[arg(long, default_value_t = 3)]
    flat: usize,
    #[arg(long, default_value_t = 0.01)]
    tail: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Which draw of the convex sampler to write.
    #[arg(long, default_value_t = 0)]
    index: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failures that map to exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn print_value(v: f64) {
    println!("{v}");
}

fn run_ineff(cmd: IneffCmd) -> Result<()> {
    match cmd {
        IneffCmd::Rho { x, y, k } => print_value(ineff::rho(x, y, k)?),
        IneffCmd::Sup { x, lower, upper, k } => {
            let s = ineff::sup_rho_over_y(x, &RateBounds::new(lower, upper)?, k)?;
            println!("{}\targmax_y={}", s.value, s.argmax_y);
        }
        IneffCmd::Asymptotic { lower, upper } => {
            print_value(ineff::asymptotic_ineff(&RateBounds::new(lower, upper)?))
        }
        IneffCmd::Gamma { x, y, k } => print_value(ineff::gamma(x, y, k)?),
        IneffCmd::LastIterate { y, k } => {
            let l = ineff::gamma_last_iterate_limit(y, k)?;
            println!("{}\tbound={}", l.limit, l.bound);
        }
        IneffCmd::Monotone { k_max } => {
            let c = ineff::rho_halfrule_monotone_check(k_max)?;
            let min = c.ratios.iter().copied().fold(f64::INFINITY, f64::min);
            println!("{}\tmin_ratio={min}", c.holds);
        }
        IneffCmd::Minimax { k, step } => {
            if !(step > 0.0 && step <= 1.0) {
                return Err(UsageError(format!("--step must lie in (0, 1], got {step}")).into());
            }
            let points = (1.0 / step).round() as usize;
            let grid: Vec<f64> = (0..=points).map(|i| (i as f64 * step).min(1.0)).collect();
            let scan = ineff::minimax_scan(k, &grid)?;
            match scan.best_x {
                Some(x) => print_value(x),
                None => println!("degenerate"),
            }
        }
        IneffCmd::General { csv } => {
            let file = File::open(&csv).with_context(|| format!("opening {}", csv.display()))?;
            let profile = formats::read_profile_csv(file, &csv.display().to_string())?;
            print_value(profile.sqrt_rule_ineff()?);
        }
    }
    Ok(())
}

fn write_report(rows: &[ReportRow], format: ReportFormat, mut out: impl Write) -> Result<()> {
    match format {
        ReportFormat::Table => {
            let width = rows.iter().map(|r| r.claim_id.len()).max().unwrap_or(8).max(8);
            writeln!(out, "{:<width$}  {:<28}  {:<14}  result", "claim", "expected", "computed")?;
            for r in rows {
                writeln!(
                    out,
                    "{:<width$}  {:<28}  {:<14}  {}",
                    r.claim_id,
                    r.expected.to_string(),
                    Sig6(r.computed_value).to_string(),
                    if r.pass { "pass" } else { "FAIL" }
                )?;
            }
        }
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(&mut out);
            w.write_record(["claim_id", "paper_value", "computed_value", "tolerance", "pass"])?;
            for r in rows {
                let expected = match r.expected {
                    claims::Expected::Value { value, .. } => value.to_string(),
                    claims::Expected::Interval { low, high } => format!("[{low};{high}]"),
                };
                w.write_record([
                    r.claim_id.clone(),
                    expected,
                    r.computed_value.to_string(),
                    r.tolerance().to_string(),
                    r.pass.to_string(),
                ])?;
            }
            w.flush()?;
        }
        ReportFormat::Json => formats::write_json(&rows, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

fn run_reproduce(args: ReproduceArgs) -> Result<bool> {
    let ids: Vec<String> = if args.all {
        claims::CLAIM_IDS.iter().map(|s| s.to_string()).collect()
    } else if args.ids.is_empty() {
        return Err(UsageError("pass claim ids or --all".into()).into());
    } else {
        args.ids
    };
    if let Some(bad) = ids.iter().find(|id| !claims::is_known(id)) {
        return Err(UsageError(format!(
            "unknown claim id '{bad}'; known ids: {}",
            claims::CLAIM_IDS.join(", ")
        ))
        .into());
    }
    if args.samples == 0 {
        return Err(UsageError("--samples must be at least 1".into()).into());
    }
    let ctx = ClaimContext {
        seed: args.seed,
        samples: args.samples,
    };
    let mut rows = Vec::new();
    for id in &ids {
        rows.extend(claims::evaluate(id, &ctx).with_context(|| format!("claim {id}"))?);
    }
    write_report(&rows, args.format, output(&args.out)?)?;
    Ok(rows.iter().all(|r| r.pass))
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let out = output(&args.out)?;
    match args.kind {
        SweepKind::Plateau => {
            let r = varmodels::sweep_plateau(args.k1max, args.k2max)?;
            formats::write_json(&PlateauSweepJson::new(args.k1max, args.k2max, &r), out)?;
        }
        SweepKind::Convex => {
            let r = parallel::sweep_convex(args.k, args.samples, args.seed, args.threshold)?;
            formats::write_json(&ConvexSweepJson::from(&r), out)?;
        }
    }
    Ok(())
}

fn rule_name(rule: RuleKind) -> &'static str {
    match rule {
        RuleKind::Sqrt => "sqrt",
        RuleKind::Uniform => "uniform",
        RuleKind::Last => "last",
        RuleKind::Invvar => "invvar",
    }
}

fn pool(stages: &[StageEstimate], rule: RuleKind) -> estcombine_core::Result<CombinedEstimate> {
    match rule {
        RuleKind::Sqrt => combine(stages, &WeightRule::SQRT),
        RuleKind::Uniform => combine(stages, &WeightRule::UNIFORM),
        RuleKind::Last => combine(stages, &WeightRule::LastOnly),
        RuleKind::Invvar => ais::combine_inverse_variance(stages),
    }
}

fn run_ais(args: AisArgs) -> Result<()> {
    let problem = match args.problem {
        ProblemKind::X2 => StandardNormalProblem::light_tailed(),
        ProblemKind::Rare => {
            if !args.t.is_finite() {
                return Err(UsageError(format!("--t must be finite, got {}", args.t)).into());
            }
            StandardNormalProblem::rare_event(args.t)
        }
    };
    let family = GaussianLocation::new(1);
    let mode = match args.mode {
        ModeKind::All => AdaptMode::AllHistory,
        ModeKind::Last => AdaptMode::LastStage,
        ModeKind::Frozen => AdaptMode::Frozen,
    };
    let cfg = AisConfig::new(args.k, args.n).with_mode(mode);
    let out = output(&args.out)?;
    if args.replications == 0 {
        return Err(UsageError("--replications must be at least 1".into()).into());
    }
    if args.replications == 1 {
        let run = ais::run_adaptive(&problem, &family, &cfg, args.seed)?;
        let combined = pool(&run.stages, args.rule)?;
        let body = RunJson::new(problem.name(), &run, rule_name(args.rule), &combined);
        formats::write_json(&body, out)?;
        return Ok(());
    }
    let runs = parallel::replicate(&problem, &family, &cfg, args.seed, args.replications)?;
    let pooled = runs
        .iter()
        .map(|r| pool(&r.stages, args.rule))
        .collect::<estcombine_core::Result<Vec<_>>>()?;
    let stages = ais::UnbiasednessStudy::from_runs(&runs, &WeightRule::SQRT, problem.true_mean())?;
    let demo = if args.replications >= 100 {
        Some(ais::BiasDemo::from_runs(&runs, problem.true_mean())?)
    } else {
        None
    };
    let body = ReplicationJson::new(
        problem.name(),
        args.k,
        args.n,
        args.seed,
        rule_name(args.rule),
        problem.true_mean(),
        &pooled,
        &stages,
        demo,
    );
    formats::write_json(&body, out)?;
    Ok(())
}

fn run_profile(args: ProfileArgs) -> Result<()> {
    let profile = match args.kind {
        ProfileKind::PowerLaw => profile_power_law(args.y, args.k)?,
        ProfileKind::Plateau => profile_plateau(args.k1, args.k2)?,
        ProfileKind::Transient => {
            if args.flat >= args.k {
                return Err(UsageError("--flat must be smaller than --K".into()).into());
            }
            profile_transient(args.flat, 1.0, args.k - args.flat, args.tail)?
        }
        ProfileKind::Convex => ConvexDecreasingSampler::new(args.k, args.seed)?.sample_indexed(args.index),
    };
    let mut out = output(&args.out)?;
    formats::write_profile_csv(&profile, &mut out)?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = parallel::pool_from_env().install(|| match cli.command {
        Command::Ineff(cmd) => run_ineff(cmd).map(|_| true),
        Command::Reproduce(args) => run_reproduce(args),
        Command::Sweep(args) => run_sweep(args).map(|_| true),
        Command::Ais(args) => run_ais(args).map(|_| true),
        Command::Profile(args) => run_profile(args).map(|_| true),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() || is_argument_error(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

/// Domain-invalid flag values (negative K, x outside [L, U], ...) are usage errors.
fn is_argument_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        matches!(
            c.downcast_ref::<estcombine_core::Error>(),
            Some(estcombine_core::Error::InvalidArgument(_) | estcombine_core::Error::TooManyTerms(_))
        )
    })
}

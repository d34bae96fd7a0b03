//! Acceptance suite: every criterion at full scale, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines print in order and the
//! process exits nonzero when any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use estcombine::claims::{self, ClaimContext, ReportRow};
use estcombine_core::ineff::{self, RateBounds};

const SEED: u64 = 42;

struct Criterion {
    number: u32,
    name: &'static str,
    claim_ids: &'static [&'static str],
    /// Wall-clock budget for the whole criterion.
    budget: Duration,
}

const CRITERIA: &[Criterion] = &[
    Criterion { number: 1, name: "square-root rule cap", claim_ids: &["ninebyeight"], budget: secs(5) },
    Criterion { number: 2, name: "minimax uniqueness", claim_ids: &["minimax"], budget: secs(1) },
    Criterion { number: 3, name: "monotone growth", claim_ids: &["monotone"], budget: secs(1) },
    Criterion { number: 4, name: "integral sandwich", claim_ids: &["sandwich"], budget: secs(1) },
    Criterion { number: 5, name: "plateau example", claim_ids: &["plateau104"], budget: secs(1) },
    Criterion { number: 6, name: "plateau sweep", claim_ids: &["plateau1121"], budget: secs(1) },
    Criterion { number: 7, name: "transient example", claim_ids: &["transient637"], budget: secs(1) },
    Criterion { number: 8, name: "generalized asymptote", claim_ids: &["scramblednet43"], budget: secs(1) },
    Criterion {
        number: 9,
        name: "exponential limits",
        claim_ids: &["gammalog2", "gammalog10", "gammaoracle"],
        budget: secs(1),
    },
    Criterion {
        number: 10,
        name: "convex-decreasing sweeps",
        claim_ids: &["convexK5", "convexK10", "convexK20"],
        budget: secs(180),
    },
    Criterion {
        number: 11,
        name: "AIS unbiasedness",
        claim_ids: &["aisunbiased", "aiscorr", "aisvarhat"],
        budget: secs(120),
    },
    Criterion { number: 12, name: "estimated-weight bias", claim_ids: &["biasdemo"], budget: secs(120) },
    Criterion { number: 13, name: "oracle equivalence", claim_ids: &["rhooracle"], budget: secs(5) },
];

const fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn extra_rows(number: u32) -> Vec<ReportRow> {
    match number {
        8 => {
            let unit = RateBounds::new(0.0, 1.0).unwrap();
            vec![ReportRow::new(
                "asymptote(0,1)",
                claims::Expected::Value { value: 9.0 / 8.0, tolerance: 0.0 },
                ineff::asymptotic_ineff(&unit),
            )]
        }
        _ => Vec::new(),
    }
}

fn main() -> ExitCode {
    let ctx = ClaimContext { seed: SEED, samples: claims::REFERENCE_SAMPLES };
    let mut failures = 0;
    for c in CRITERIA {
        let start = Instant::now();
        let mut rows = Vec::new();
        let mut error = None;
        for id in c.claim_ids {
            match claims::evaluate(id, &ctx) {
                Ok(r) => rows.extend(r),
                Err(e) => error = Some(format!("{id}: {e}")),
            }
        }
        rows.extend(extra_rows(c.number));
        let elapsed = start.elapsed();
        let in_budget = elapsed <= c.budget;
        let pass = error.is_none() && in_budget && rows.iter().all(|r| r.pass);
        if !pass {
            failures += 1;
        }
        let detail: Vec<String> = rows
            .iter()
            .map(|r| format!("{}={}{}", r.claim_id, r.computed_value, if r.pass { "" } else { " (out of range)" }))
            .collect();
        println!(
            "{} criterion {:>2} {:<26} {:>8.2}s/{}s  {}{}",
            if pass { "PASS" } else { "FAIL" },
            c.number,
            c.name,
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            detail.join(" "),
            error.map(|e| format!(" error: {e}")).unwrap_or_default()
        );
    }
    println!("{} of {} criteria passed", CRITERIA.len() - failures, CRITERIA.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

use std::process::{Command, Output};

use serde_json::Value;

fn estcombine(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_estcombine"))
        .args(args)
        .output()
        .expect("spawn estcombine")
}

fn stdout_f64(out: &Output) -> f64 {
    String::from_utf8_lossy(&out.stdout).trim().parse().expect("numeric stdout")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json stdout")
}

#[test]
fn rho_examples() {
    let out = estcombine(&["ineff", "rho", "--x", "0.5", "--y", "1", "--K", "1000000"]);
    assert!(out.status.success());
    assert!((stdout_f64(&out) - 1.125).abs() < 1e-3);

    let out = estcombine(&["ineff", "rho", "--x", "0.3", "--y", "0.3", "--K", "17"]);
    assert!((stdout_f64(&out) - 1.0).abs() < 1e-14);

    let out = estcombine(&["ineff", "rho", "--x", "0.5", "--y", "1", "--K", "2"]);
    let closed = 6.0 / (1.0 + 2f64.sqrt()).powi(2);
    assert!((stdout_f64(&out) - closed).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(estcombine(&["ineff", "rho", "--x", "abc", "--y", "1", "--K", "2"]).status.code(), Some(2));
    assert_eq!(estcombine(&["ineff", "rho", "--x", "0.5", "--y", "1", "--K", "0"]).status.code(), Some(2));
    assert_eq!(estcombine(&["reproduce", "nosuchclaim"]).status.code(), Some(2));
    assert_eq!(
        estcombine(&["ais", "--problem", "x3", "--K", "2", "--n", "10"]).status.code(),
        Some(2)
    );
    assert_eq!(
        estcombine(&["ais", "--problem", "x2", "--K", "2", "--n", "10", "--rule", "median"]).status.code(),
        Some(2)
    );
}

#[test]
fn reproduce_single_claims() {
    let out = estcombine(&["reproduce", "ninebyeight", "--format", "json"]);
    assert!(out.status.success());
    let rows = json(&out);
    assert_eq!(rows[0]["claim_id"], "ninebyeight");
    assert_eq!(rows[0]["pass"], true);

    let out = estcombine(&["reproduce", "plateau104", "--format", "json"]);
    assert!(out.status.success());
    let rows = json(&out);
    assert_eq!(rows.as_array().unwrap().len(), 1);
    assert!((rows[0]["computed_value"].as_f64().unwrap() - 1.04).abs() < 1e-3);
}

#[test]
fn reproduce_csv_report() {
    let out = estcombine(&["reproduce", "gammalog2", "scramblednet43", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("claim_id,paper_value,computed_value,tolerance,pass"));
    assert_eq!(lines.next(), Some("gammalog2,2,2,0.000000000001,true"));
    assert!(lines.next().unwrap().starts_with("scramblednet43,1.3333333333333333,"));
    assert!(!text.contains('\r'));
}

#[test]
fn plateau_sweep_json() {
    let out = estcombine(&["sweep", "--kind", "plateau", "--k1max", "100", "--k2max", "100"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!(v["max_rho"].as_f64().unwrap() <= 1.122);
}

#[test]
fn convex_sweep_json_schema() {
    let out = estcombine(&["sweep", "--kind", "convex", "--K", "5", "--samples", "1000", "--seed", "7"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["K"], 5);
    assert_eq!(v["n_samples"], 1000);
    assert!(v["count_exceeding"].as_u64().unwrap() <= 1000);
    assert_eq!(v["worst_profile"].as_array().unwrap().len(), 5);
}

#[test]
fn sweep_output_is_independent_of_thread_count() {
    let args = ["sweep", "--kind", "convex", "--K", "10", "--samples", "30000", "--seed", "1"];
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_estcombine"))
            .args(args)
            .env("ESTCOMBINE_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn sweep_io_failure_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no/such/dir/out.json");
    let out = estcombine(&["sweep", "--kind", "plateau", "--out", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn ais_single_run() {
    let out = estcombine(&["ais", "--problem", "x2", "--K", "5", "--n", "1000", "--rule", "sqrt", "--seed", "3"]);
    assert!(out.status.success());
    let v = json(&out);
    let mu = v["combined"]["mu_hat"].as_f64().unwrap();
    let se = v["combined"]["var_hat"].as_f64().unwrap().sqrt();
    assert!((mu - 1.0).abs() <= 5.0 * se, "{mu} ± {se}");
    assert_eq!(v["stages"].as_array().unwrap().len(), 5);
}

#[test]
fn ais_rare_event_replications() {
    let out = estcombine(&[
        "ais", "--problem", "rare", "--t", "3", "--K", "10", "--n", "2000", "--rule", "sqrt", "--seed", "3",
        "--replications", "200",
    ]);
    assert!(out.status.success());
    let v = json(&out);
    let truth = 1.3498980316300946e-3;
    assert!((v["true_mean"].as_f64().unwrap() - truth).abs() < 1e-15);
    let mean = v["mean"].as_f64().unwrap();
    let se = v["std_error"].as_f64().unwrap();
    assert!((mean - truth).abs() <= 4.0 * se, "{mean} ± {se}");
    assert!(v["bias_demo"].is_object());
}

#[test]
fn ais_single_stage_last_equals_sqrt() {
    let base = ["ais", "--problem", "x2", "--K", "1", "--n", "100", "--seed", "9", "--rule"];
    let run = |rule: &str| {
        let mut args = base.to_vec();
        args.push(rule);
        json(&estcombine(&args))
    };
    let (mut last, mut sqrt) = (run("last"), run("sqrt"));
    assert_eq!(last["combined"]["mu_hat"], sqrt["combined"]["mu_hat"]);
    last["combined"]["rule"] = Value::Null;
    sqrt["combined"]["rule"] = Value::Null;
    assert_eq!(last, sqrt);
}

#[test]
fn same_seed_gives_identical_bytes() {
    let args = ["ais", "--problem", "rare", "--K", "4", "--n", "300", "--seed", "11", "--rule", "invvar"];
    assert_eq!(estcombine(&args).stdout, estcombine(&args).stdout);
}

#[test]
fn profile_csv_round_trip_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plateau.csv");
    let p = path.to_str().unwrap();
    assert!(estcombine(&["profile", "--kind", "plateau", "--k1", "5", "--k2", "5", "--out", p]).status.success());
    let out = estcombine(&["ineff", "general", "--csv", p]);
    assert!(out.status.success());
    assert!((stdout_f64(&out) - 1.0399673833766514).abs() < 1e-12);
}

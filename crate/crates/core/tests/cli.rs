//! End-to-end runs of the `robust-agg` binary.

use std::process::{Command, Output};

use serde_json::Value;

use robust_agg::evaluate::worst_case_regret;
use robust_agg::model::{AggregationRule, Scenario};
use robust_agg::optimize::{optimal_regret_rule, two_agent_closed_form};
use robust_agg::rational::{parse_rational, q, Q};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robust-agg")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let out = run(&full);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn exact_of(v: &Value, key: &str) -> Q {
    parse_rational(v["exact"][key].as_str().unwrap_or_else(|| panic!("no exact {key} in {v}"))).unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn exit_codes_separate_usage_from_domain_errors() {
    assert_eq!(run(&["derive", "--mu", "1/2", "--p1", "1/4", "--p2", "3/4", "--n", "4"]).status.code(), Some(0));
    assert_eq!(run(&["--help"]).status.code(), Some(0));

    let bad = run(&["derive", "--mu", "1/2", "--p1", "3/4", "--p2", "1/4", "--n", "4"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("p1 < 1/2 < p2"));
    assert_eq!(run(&["two-agent", "--a", "1/2", "--b", "1/2"]).status.code(), Some(1));

    assert_eq!(run(&["derive", "--mu", "1/2"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["derive", "--mu", "half", "--p1", "1/4", "--p2", "3/4", "--n", "4"]).status.code(), Some(2));
}

#[test]
fn derive_prints_the_conditional_means() {
    let out = run(&["derive", "--mu", "1/2", "--p1", "1/4", "--p2", "3/4", "--n", "4"]);
    let text = stdout(&out);
    assert!(text.contains("a=1/4") && text.contains("b=3/4"), "{text}");
    // Decimal input is parsed exactly.
    let v = json(&["derive", "--mu", "0.5", "--p1", "0.25", "--p2", "0.75", "--n", "4"]);
    assert_eq!(v["derived"]["a"], "1/4");
    assert_eq!(v["derived"]["b"], "3/4");
}

#[test]
fn dictator_report_matches_the_library() {
    let v = json(&["verify-dictator", "--mu", "1/2", "--p1", "1/4", "--p2", "3/4", "--n", "4"]);
    let s = Scenario::new(q(1, 2), q(1, 4), q(3, 4), 4).unwrap();
    let opt = optimal_regret_rule(&s).unwrap();
    assert_eq!(exact_of(&v, "Reg"), opt.value);
    assert_eq!(exact_of(&v, "Reg"), q(1, 4));
    let rule: Vec<Q> = v["exact"]["rule"].as_array().unwrap().iter().map(|x| parse_rational(x.as_str().unwrap()).unwrap()).collect();
    assert_eq!(rule, opt.rule.values());
    assert_eq!(v["outputs"]["condition"], true);
    assert_eq!(v["outputs"]["unique"], true);
}

#[test]
fn two_agent_examples() {
    for (a, b, case, f, reg) in [("1/5", "7/10", 5, q(3, 5), q(3, 25)), ("3/5", "9/10", 4, q(1, 10), q(9, 100)), ("1/10", "3/10", 1, q(7, 8), q(7, 80))] {
        let v = json(&["two-agent", "--a", a, "--b", b]);
        assert_eq!(v["outputs"]["case"], case);
        assert_eq!(exact_of(&v, "f(1/2)"), f);
        assert_eq!(exact_of(&v, "Reg"), reg);
        let lib = two_agent_closed_form(&parse_rational(a).unwrap(), &parse_rational(b).unwrap()).unwrap();
        assert_eq!((lib.f_half, lib.regret), (f, reg));
    }
}

#[test]
fn regret_of_rule_round_trips() {
    let v = json(&["regret-of-rule", "--mu", "1/2", "--a", "1/5", "--b", "7/10", "--n", "2", "--rule", "0,3/5,1"]);
    let s = Scenario::from_conditionals(q(1, 2), q(1, 5), q(7, 10), 2).unwrap();
    let rule = AggregationRule::new(vec![q(0, 1), q(3, 5), q(1, 1)]).unwrap();
    assert_eq!(exact_of(&v, "Reg"), worst_case_regret(&rule, &s).unwrap().0);
    assert_eq!(exact_of(&v, "Reg"), q(3, 25));

    let mismatch = run(&["regret-of-rule", "--mu", "1/2", "--a", "1/5", "--b", "7/10", "--n", "2", "--rule", "0,1"]);
    assert_eq!(mismatch.status.code(), Some(1));
}

#[test]
fn scenario_files_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.json");
    std::fs::write(&path, r#"{"mu": "1/2", "p1": "1/4", "p2": "3/4", "n": 4}"#).unwrap();
    let file = path.to_str().unwrap();
    let v = json(&["derive", "--scenario", file]);
    assert_eq!((v["derived"]["a"].as_str(), v["derived"]["b"].as_str()), (Some("1/4"), Some("3/4")));
    let v = json(&["optimal-rule", "--scenario", file, "--n", "2"]);
    let s = Scenario::new(q(1, 2), q(1, 4), q(3, 4), 2).unwrap();
    assert_eq!(exact_of(&v, "Reg"), optimal_regret_rule(&s).unwrap().value);
}

#[test]
fn sweeps_are_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.json");
    std::fs::write(&config, r#"{"kind": "ab_grid", "steps": 4}"#).unwrap();
    let out_path = dir.path().join("grid.csv");
    let args = ["sweep", "--config", config.to_str().unwrap(), "--out", out_path.to_str().unwrap()];
    assert_eq!(run(&args).status.code(), Some(0));
    let first = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(run(&args).status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&out_path).unwrap(), first);

    assert!(!first.contains('\r'));
    let mut rows = csv::Reader::from_reader(first.as_bytes());
    let header = rows.headers().unwrap().clone();
    assert_eq!(&header[0], "a");
    let records: Vec<_> = rows.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), 16);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    // Wherever a region applies, its regret agrees with the LP column.
    for r in &records {
        if !r[col("region")].is_empty() {
            assert_eq!(r[col("closed_form_regret")], r[col("lp_regret")]);
        }
    }
    assert_eq!(stdout(&run(&args[..3])), first);
}

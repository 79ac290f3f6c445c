//! End-to-end tests of the `hlpweak` binary.

use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn hlpweak(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hlpweak"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).unwrap_or_else(|e| panic!("{e}: {}", stdout(out)))
}

#[test]
fn exit_codes() {
    assert_eq!(code(&hlpweak(&["verify", "thm22", "n=2", "gamma=1"])), 0);
    assert_eq!(code(&hlpweak(&["verify", "thm21"])), 1);
    let bad = hlpweak(&["verify", "thm21", "p=1"]);
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("domain error"));
    assert_eq!(code(&hlpweak(&["verify", "thm99"])), 2);
    assert_eq!(code(&hlpweak(&["constants", "q=two"])), 2);
    assert_eq!(code(&hlpweak(&["--help"])), 0);
}

#[test]
fn violated_hypotheses_are_labelled() {
    let out = hlpweak(&["verify", "thm21", "gamma=0.5", "--json", "--no-timestamp"]);
    assert_ne!(code(&out), 2);
    let v = json(&out);
    assert_eq!(v["result"]["hypotheses"]["overall"], Value::Bool(false));
    for r in v["result"]["reports"].as_array().unwrap() {
        assert_eq!(r["hypotheses"], "hypothesis-violated");
    }
    let human = stdout(&hlpweak(&["verify", "thm21", "gamma=0.5"]));
    assert!(human.contains("VIOLATED"));
    assert!(human.contains("hypothesis-violated"));
}

#[test]
fn config_file_with_override() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "# thm22 in three dimensions\nn = 3\ngamma = 2").unwrap();
    let path = file.path().to_str().unwrap();
    let v = json(&hlpweak(&[
        "constants",
        "--config",
        path,
        "gamma=0",
        "--json",
        "--no-timestamp",
    ]));
    assert_eq!(v["params"]["n"], "3");
    assert_eq!(v["params"]["gamma"], "0");
    let from_file = json(&hlpweak(&[
        "constants",
        "--config",
        path,
        "--json",
        "--no-timestamp",
    ]));
    assert_eq!(from_file["params"]["gamma"], "2");
}

#[test]
fn json_envelope_and_reports() {
    let out = hlpweak(&["verify", "thm22", "--json", "--rel-tol", "1e-9"]);
    let v = json(&out);
    for key in [
        "command",
        "params",
        "rel_tol",
        "mc_seed",
        "result",
        "all_pass",
        "runtime_ms",
        "timestamp_unix",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["rel_tol"].as_f64(), Some(1e-9));
    assert_eq!(v["all_pass"], Value::Bool(true));
    let reports = v["result"]["reports"].as_array().unwrap();
    assert!(!reports.is_empty());
    for r in reports {
        for key in [
            "case",
            "computed",
            "reference",
            "reference_provenance",
            "rel_error",
            "tolerance",
            "pass",
            "runtime_ms",
        ] {
            assert!(r.get(key).is_some(), "report missing {key}");
        }
        let pass = r["pass"].as_bool().unwrap();
        assert_eq!(
            pass,
            r["rel_error"].as_f64().unwrap() <= r["tolerance"].as_f64().unwrap()
        );
    }
    let quiet = json(&hlpweak(&["verify", "thm22", "--json", "--no-timestamp"]));
    assert!(quiet.get("timestamp_unix").is_none());
    assert_eq!(quiet["runtime_ms"], 0);
}

#[test]
fn output_is_byte_identical_across_runs() {
    let args = ["verify", "thm22", "n=2", "--json", "--no-timestamp"];
    assert_eq!(hlpweak(&args).stdout, hlpweak(&args).stdout);
}

#[test]
fn monte_carlo_seed_controls_output() {
    let run = |seed: &str| {
        stdout(&hlpweak(&[
            "apply",
            "kernel",
            "kernel=hilbert",
            "m=4",
            "f=1*r^0 on (0,1]",
            "r=1",
            "mc_samples=20000",
            "--mc-seed",
            seed,
            "--csv",
        ]))
    };
    assert_eq!(run("3"), run("3"));
    assert_ne!(run("3"), run("4"));
}

#[test]
fn probe_reports_best_ratio() {
    let v = json(&hlpweak(&["probe", "--json", "--no-timestamp"]));
    let res = &v["result"];
    for key in ["best_params", "best_ratio", "bound", "gap", "evaluations"] {
        assert!(res.get(key).is_some(), "missing {key}");
    }
    assert!(res["best_ratio"].as_f64().unwrap() <= res["bound"].as_f64().unwrap() * (1.0 + 1e-9));
}

#[test]
fn csv_outputs_have_headers() {
    let verify = stdout(&hlpweak(&["verify", "thm22", "--csv"]));
    assert!(verify.starts_with("case,"));
    let apply = stdout(&hlpweak(&[
        "apply",
        "hlp",
        "f=1*r^1 on (0,1]",
        "r=0.5,2",
        "--csv",
    ]));
    let lines: Vec<&str> = apply.lines().collect();
    assert_eq!(lines[0], "r,value,error_estimate,converged");
    assert_eq!(lines.len(), 3);
}

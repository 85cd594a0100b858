use std::f64::consts::PI;
use std::process::{Command, Output};

use serde_json::Value;

const GEOM: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/geometries");

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_billiard-weyl")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let o = run(args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("single JSON object")
}

fn square() -> String {
    format!("{GEOM}/square.bil")
}

#[test]
fn weyl_square() {
    let v = json(&["weyl", "--geometry", &square()]);
    let row = &v["rows"][0];
    assert!((row[0].as_f64().unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-12);
    assert!((row[1].as_f64().unwrap() + 1.0 / (2.0 * PI)).abs() < 1e-12);
    assert!((row[2].as_f64().unwrap() - 0.25).abs() < 1e-12);
}

#[test]
fn corner_csv_has_fifteen_rows() {
    let o = run(&["--format", "csv", "corner", "--alpha-grid", "0.1:1.5:15"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 16);
    assert!(lines[0].starts_with("alpha,weyl"));
}

#[test]
fn ledger_totals() {
    let v = json(&["ledger"]);
    let rows = v["rows"].as_array().unwrap();
    let total = rows.last().unwrap();
    assert_eq!(total[0], "total");
    assert_eq!(total[2], "1");
    assert_eq!(total[3], "-1");
    let delta = total[5].as_f64().unwrap();
    assert!((delta - (1.0 / 16.0 - 1.0 / (16.0 * PI * PI))).abs() < 1e-12, "{total:?}");
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    assert_eq!(run(&["weyl"]).status.code(), Some(2));
    assert_eq!(run(&["fold", "--alpha", "4.0", "--tau-list", "0.1"]).status.code(), Some(2));
    assert_eq!(run(&["green", "--y", "0.5", "--k", "10", "--tol", "1e-14"]).status.code(), Some(3));
    assert_eq!(run(&["weyl", "--geometry", "/nonexistent/x.bil"]).status.code(), Some(4));
    let bad = std::env::temp_dir().join("billiard_weyl_open.bil");
    std::fs::write(&bad, "billiard v1\nline 0 0 1 0\nline 1 0 1 1\n").unwrap();
    assert_eq!(run(&["weyl", "--geometry", bad.to_str().unwrap()]).status.code(), Some(4));
    let h = run(&["--help"]);
    assert_eq!(h.status.code(), Some(0));
}

fn invocations() -> Vec<Vec<String>> {
    let sq = square();
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    vec![
        s(&["weyl", "--geometry", &sq]),
        s(&["staircase", "--shape", "rectangle", "--window", "500:2000"]),
        s(&["corner", "--alpha-grid", "0.2:1.4:4"]),
        s(&["ledger", "--verify"]),
        s(&["fold", "--alpha", "1.0", "--tau-list", "0.1,0.2"]),
        s(&["monodromy", "--geometry", &sq, "--start", "0.5,0.3", "--bounces", "3"]),
        s(&["green", "--y", "0.5", "--k", "10"]),
    ]
}

#[test]
fn every_subcommand_emits_json_and_csv() {
    for args in invocations() {
        let a: Vec<&str> = args.iter().map(String::as_str).collect();
        let v = json(&a);
        assert!(v.is_object(), "{a:?}");
        let ncol = v["columns"].as_array().unwrap().len();
        assert!(!v["rows"].as_array().unwrap().is_empty(), "{a:?}");

        let mut c = vec!["--format", "csv"];
        c.extend(&a);
        let o = run(&c);
        assert_eq!(o.status.code(), Some(0), "{a:?}");
        let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
        assert_eq!(rdr.headers().unwrap().len(), ncol, "{a:?}");
        assert!(rdr.records().all(|r| r.unwrap().len() == ncol));
    }
}

#[test]
fn repeated_runs_are_identical() {
    for args in invocations() {
        let a: Vec<&str> = args.iter().map(String::as_str).collect();
        let mut a2 = vec!["--seed", "7"];
        a2.extend(&a);
        let first = run(&a2);
        let second = run(&a2);
        assert_eq!(first.stdout, second.stdout, "{a:?}");
    }
}

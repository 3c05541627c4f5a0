//! End-to-end runs of the `ddroot` binary.

use std::process::{Command, Output};

fn ddroot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddroot")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn run_prints_published_costs() {
    let out = ddroot(&["run", "--problem", "quad2", "--digits", "256", "--format", "csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("problem,method,I,C,CEI,TF"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 5);
    for (method, cost) in [("phi0", "32.5"), ("phi1d1", "59.0"), ("phi1d2", "65.0"), ("phi2d1", "69.0"), ("phi2d2", "75.0")] {
        let row = rows.iter().find(|r| r.starts_with(&format!("quad2,{method},"))).unwrap();
        assert_eq!(row.split(',').nth(3), Some(cost), "{row}");
    }
}

#[test]
fn json_rows_are_parseable() {
    let out = ddroot(&["run", "--problem", "cos3", "--method", "phi2", "--dd", "d2", "--digits", "128", "--format", "json"]);
    assert!(out.status.success());
    let rows = ddroot::bench::parse_rows(&stdout(&out)).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].error.is_none());
    let cost: f64 = rows[0].cost.parse().unwrap();
    assert!((cost - 4529.2).abs() < 1e-9, "{}", rows[0].cost);
}

#[test]
fn curves_and_checks() {
    let out = ddroot(&["curves", "--which", "g11", "--samples", "10"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().next(), Some("m,mu,domain"));

    let out = ddroot(&["check", "--suite", "theorems"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}

#[test]
fn config_file_and_errors() {
    let dir = std::env::temp_dir().join(format!("ddroot-cli-it-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let good = dir.join("good.conf");
    std::fs::write(&good, "problem = quad2\nmethod = phi0\ndigits = 64\nformat = csv\n").unwrap();
    let out = ddroot(&["run", "--config", good.to_str().unwrap(), "--digits", "128"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().count(), 2);

    let bad = dir.join("bad.conf");
    std::fs::write(&bad, "colour = blue\n").unwrap();
    let out = ddroot(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = ddroot(&["run", "--problem", "nope"]);
    assert!(!out.status.success());
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lppl(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lppl")).args(args).current_dir(dir).output().unwrap()
}

fn ok(args: &[&str], dir: &Path) -> Output {
    let out = lppl(args, dir);
    assert!(out.status.success(), "lppl {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().next().unwrap()).unwrap()
}

fn keys(v: &Value) -> Vec<&str> {
    let mut k: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    k.sort_unstable();
    k
}

fn bubble_csv(dir: &Path) {
    ok(
        &[
            "synth",
            "--regime",
            "lppl",
            "--params",
            "tc=212",
            "m=0.5",
            "omega=6.28",
            "phi=1",
            "--noise",
            "0.01",
            "--end",
            "199",
            "--seed",
            "2",
            "--output",
            "b.csv",
        ],
        dir,
    );
}

#[test]
fn price_examples() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["price", "--dividend", "100", "--return", "0.08", "--growth", "0.04"], dir.path());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "2500\n");
    let out = ok(&["price", "--dividend", "100", "--return", "0.06", "--growth", "0.04"], dir.path());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "5000\n");

    let out = lppl(&["price", "--dividend", "100", "--return", "0.04", "--growth", "0.04"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "no_finite_price");
    assert!(err["message"].as_str().unwrap().contains("0.04"));
}

#[test]
fn cascade_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["cascade", "--p0", "2", "--rate", "0.02", "--steps", "10"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<f64>> =
        text.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(text.lines().next(), Some("time,population,rate,doubling_time"));
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[0], vec![0.0, 2.0, 0.02, 34.6573590280]);
    assert!((rows[9][0] - 69.18).abs() < 0.01);
    assert_eq!(rows[9][1], 1024.0);
}

#[test]
fn synth_writes_series_and_truth() {
    let dir = tempfile::tempdir().unwrap();
    bubble_csv(dir.path());
    let csv = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert!(csv.starts_with("time,price,log_price\n"));
    assert_eq!(csv.lines().count(), 201);
    let truth: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("b.truth.json")).unwrap()).unwrap();
    assert_eq!(keys(&truth), ["grid", "noise_sigma", "params", "regime", "seed"]);
    assert_eq!(truth["regime"], "lppl");
    assert_eq!(truth["params"]["t_c"], 212.0);

    ok(&["synth", "--regime", "cascade", "--params", "rate=0.02", "--end", "60", "--output", "c.csv"], dir.path());
    ok(&["synth", "--regime", "logistic", "--params", "rate=0.1", "capacity=50", "--output", "l.csv"], dir.path());
    let out = lppl(&["synth", "--regime", "hyperbolic", "--params", "tc=100", "--end", "150"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "beyond_critical_time");
    let out = lppl(&["synth", "--regime", "exp", "--params", "speed=3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fit_schema() {
    let dir = tempfile::tempdir().unwrap();
    bubble_csv(dir.path());
    let out = ok(&["fit", "--input", "b.csv", "--t1", "0", "--t2", "199", "--seed", "4"], dir.path());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(
        keys(&v),
        [
            "checks",
            "label",
            "n_points",
            "oscillation_snr",
            "oscillations",
            "params",
            "qualified",
            "reasons",
            "rmse",
            "scaling_ratio",
            "seed",
            "sign",
            "sse",
            "window"
        ]
    );
    assert_eq!(keys(&v["params"]), ["a", "b", "c", "c1", "c2", "m", "omega", "phi", "t_c"]);
    assert_eq!(keys(&v["window"]), ["end", "start", "t1", "t2"]);
    assert_eq!(v["qualified"], true);
    assert_eq!(v["sign"], "positive_bubble");
    assert!((v["params"]["t_c"].as_f64().unwrap() - 212.0).abs() < 10.0);
    assert_eq!(keys(&v["checks"][0]), ["name", "passed", "reason", "value"]);

    // filter overrides and --output
    ok(
        &[
            "fit",
            "--input",
            "b.csv",
            "--t1",
            "0",
            "--t2",
            "199",
            "--seed",
            "4",
            "--filters",
            "m_max=0.3",
            "--output",
            "f.json",
        ],
        dir.path(),
    );
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("f.json")).unwrap()).unwrap();
    assert!(v["params"]["m"].as_f64().unwrap() <= 0.3);
}

#[test]
fn fit_output_is_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    bubble_csv(dir.path());
    let base = ["fit", "--input", "b.csv", "--t1", "50", "--t2", "199", "--seed", "1"];
    let one = ok(&[&base[..], &["--jobs", "1"]].concat(), dir.path());
    let four = ok(&[&base[..], &["--jobs", "4"]].concat(), dir.path());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn scan_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    bubble_csv(dir.path());
    std::fs::write(dir.path().join("scan.conf"), "# quick scan\nstarts = 8\nevery = 40\n").unwrap();
    ok(
        &["scan", "--input", "b.csv", "--config", "scan.conf", "--windows", "60,100,150,199", "--out-dir", "out"],
        dir.path(),
    );
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(keys(&report), ["band", "dates", "failed_fits", "fits", "label", "median_passed", "skipped_pairs"]);
    let dates = report["dates"].as_array().unwrap();
    assert_eq!(dates.len(), 5);
    assert_eq!(
        keys(&dates[0]),
        ["alarm", "date", "negative", "positive", "qualified", "sign", "tc", "tc_samples", "total"]
    );
    let max_alarm = dates.iter().map(|d| d["alarm"].as_f64().unwrap()).fold(0.0, f64::max);
    assert!(max_alarm > 0.5, "{max_alarm}");
    let last = dates.last().unwrap();
    assert_eq!(last["tc"]["status"], "band");
    assert_eq!(keys(&last["tc"]), ["high", "low", "median", "status"]);

    let csv = std::fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("date,alarm,qualified,total,tc_q10,tc_median,tc_q90,sign"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = lppl(&["fit", "--input", "missing.csv", "--t1", "0", "--t2", "9"], d);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "usage");
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage:"));

    assert_eq!(lppl(&["frobnicate"], d).status.code(), Some(2));
    assert_eq!(lppl(&["price", "--dividend", "1"], d).status.code(), Some(2));

    bubble_csv(d);
    let out = lppl(&["scan", "--input", "b.csv", "--filters", "nonsense=1"], d);
    assert_eq!(out.status.code(), Some(2));
    let out = lppl(&["scan", "--input", "b.csv", "--band", "0.9,0.1"], d);
    assert_eq!(out.status.code(), Some(2));
    let out = lppl(&["fit", "--input", "b.csv", "--t1", "0", "--t2", "199", "--filters", "m_min=2"], d);
    assert_eq!(out.status.code(), Some(2));
    let out = lppl(&["scan", "--input", "b.csv", "--config", "absent.conf"], d);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    bubble_csv(d);
    let out = lppl(&["fit", "--input", "b.csv", "--t1", "0", "--t2", "10"], d);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "window_too_small");

    std::fs::write(d.join("bad.csv"), "date,close\n2020-01-01,1\n").unwrap();
    let out = lppl(&["fit", "--input", "bad.csv", "--t1", "0", "--t2", "10"], d);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "missing_column");
}

#[test]
fn dated_input_and_rejected_rows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut text = String::from("date,close\n");
    for i in 0..60 {
        let day = calendar_day(i);
        text.push_str(&format!("{day},{}\n", 100.0 * (1.0 + 0.002 * i as f64)));
    }
    text.push_str("2020-03-15,-4\n");
    std::fs::write(d.join("dated.csv"), text).unwrap();
    let out = ok(
        &[
            "fit",
            "--input",
            "dated.csv",
            "--price-col",
            "close",
            "--t1",
            "2020-01-01",
            "--t2",
            "2020-02-29",
            "--filters",
            "starts=4",
        ],
        d,
    );
    let warning = stderr_json(&out);
    assert_eq!(warning["warning"], "rejected_row");
    assert_eq!(warning["line"], 62);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    // 2020-01-01 is day 18262 since 1970-01-01
    assert_eq!(v["window"]["t1"], 18262.0);
    let (start, end) = (v["window"]["start"].as_u64().unwrap(), v["window"]["end"].as_u64().unwrap());
    assert_eq!(v["n_points"].as_u64().unwrap(), end - start);
    assert_eq!(end - start, 60);
}

/// Consecutive days from 2020-01-01 (January and February 2020 only).
fn calendar_day(i: usize) -> String {
    if i < 31 {
        format!("2020-01-{:02}", i + 1)
    } else {
        format!("2020-02-{:02}", i - 30)
    }
}

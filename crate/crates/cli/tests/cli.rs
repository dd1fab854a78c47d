use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fountain-eval"));
    c.env_remove("FOUNTAIN_EVAL_CONSTANTS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn error_record(o: &Output) -> Value {
    serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn reference_budget_totals() {
    let v = stdout_json(&run(&["budget"]));
    assert_eq!(v["total_bias_1e16"].as_f64().unwrap(), 626.9);
    assert_eq!(v["total_u_b_1e16"].as_f64().unwrap(), 2.3);
    assert_eq!(v["entries"].as_array().unwrap().len(), 13);

    let o = run(&["budget", "--format", "text"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let total = text.lines().find(|l| l.starts_with("Total")).unwrap();
    assert!(total.contains("626.9") && total.contains("2.3"), "{total}");
    assert!(text.contains("calculated at low density"));
}

#[test]
fn budget_report_reingests() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["budget", "--out", p(dir.path())]);
    assert!(o.status.success());
    let first = fs::read_to_string(dir.path().join("budget.json")).unwrap();
    let again = run(&["budget", "--input", p(&dir.path().join("budget.json"))]);
    assert!(again.status.success());
    assert_eq!(String::from_utf8(again.stdout).unwrap().trim_end(), first.trim_end());
}

#[test]
fn adev_of_constant_series_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cycles.csv");
    let mut csv = String::from("mjd,density,y_rel,n_atoms\n");
    for i in 0..64 {
        let d = if i % 2 == 0 { "H" } else { "L" };
        csv.push_str(&format!("{},{d},2.5e-14,1e5\n", 60000.0 + i as f64 * 1.5e-5));
    }
    fs::write(&path, csv).unwrap();
    let o = run(&["adev", "--cycles", p(&path)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "tau_s,adev,adev_err");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5);
    for r in rows {
        let f: Vec<f64> = r.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!((f[1], f[2]), (0.0, 0.0), "{r}");
    }
}

#[test]
fn missing_input_exits_2() {
    let o = run(&["eval-collisional", "--cycles", "/no/such/cycles.csv"]);
    assert_eq!(o.status.code(), Some(2));
    let rec = error_record(&o);
    assert_eq!(rec["error"], "io");
    assert_eq!(rec["exit_code"], 2);

    let o = run(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_record(&o)["error"], "usage");
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    fs::write(&path, "height_mm,fringe_hz\n600,abc\n").unwrap();
    let o = run(&["eval-zeeman", "--scan", p(&path)]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_record(&o)["error"], "parse");
}

#[test]
fn unresolved_tilt_sensitivity_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tilt.csv");
    let mut csv = String::from("axis,pulse,theta_mrad,dy_frac\n");
    for axis in ["X", "Y"] {
        for i in 0..9 {
            let dy = if i % 2 == 0 { 1e-15 } else { -1e-15 };
            csv.push_str(&format!("{axis},pi/2,{},{dy}\n", -4.0 + i as f64));
        }
    }
    fs::write(&path, csv).unwrap();
    let o = run(&["eval-dcp", "--scans", p(&path), "--mc-trials", "1000"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(error_record(&o)["error"], "unresolved_sensitivity");
}

#[test]
fn simulate_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let o = run(&["simulate", "--out", p(&data), "--cycles", "4000", "--seed", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "config.json",
        "truth.json",
        "cycles.csv",
        "launch_scan.csv",
        "routine.json",
        "tilt_scans.csv",
        "temperature.csv",
        "field_map_true.csv",
    ] {
        assert!(data.join(f).exists(), "{f}");
    }

    let res = dir.path().join("res");
    let o = run(&[
        "budget",
        "--data",
        p(&data),
        "--out",
        p(&res),
        "--mc-trials",
        "1000",
        "--seed",
        "5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let budget: Value = serde_json::from_str(&fs::read_to_string(res.join("budget.json")).unwrap()).unwrap();
    let ev: Value = serde_json::from_str(&fs::read_to_string(res.join("evaluation.json")).unwrap()).unwrap();
    let truth: Value = serde_json::from_str(&fs::read_to_string(data.join("truth.json")).unwrap()).unwrap();

    let entries = budget["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 13);
    let bbr = entries.iter().find(|e| e["name"] == "Blackbody radiation").unwrap();
    assert!((bbr["bias_1e16"].as_f64().unwrap() + 165.9).abs() < 0.3);

    let y_zero = ev["collisional"]["y_zero"].as_f64().unwrap();
    let u_a = ev["stability"]["u_a"].as_f64().unwrap();
    let y_true = truth["zero_density_y"].as_f64().unwrap();
    assert!(
        (y_zero - y_true).abs() <= 3.0 * u_a,
        "{y_zero:e} vs {y_true:e} (u_a {u_a:e})"
    );
    let zeeman = ev["zeeman"]["result"]["bias"].as_f64().unwrap();
    assert!((zeeman * 1e15 - 72.9).abs() < 0.2, "{zeeman:e}");
}

#[test]
fn simulate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = run(&["simulate", "--out", p(d.path()), "--cycles", "200", "--seed", "9"]);
        assert!(o.status.success());
    }
    for f in [
        "cycles.csv",
        "launch_scan.csv",
        "tilt_scans.csv",
        "truth.json",
        "routine.json",
    ] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let c = tempfile::tempdir().unwrap();
    run(&["simulate", "--out", p(c.path()), "--cycles", "200", "--seed", "10"]);
    assert_ne!(
        fs::read(a.path().join("cycles.csv")).unwrap(),
        fs::read(c.path().join("cycles.csv")).unwrap()
    );
}

#[test]
fn compare_record() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rec.json");
    let rec = serde_json::json!({
        "mjd_start": 60464.0, "mjd_end": 60489.0,
        "y_fountain_maser": 1.5e-16, "y_maser_lab": 0.8e-16, "y_utc_lab": -0.5e-16,
        "u_a": 2.3e-16, "u_b": 2.3e-16, "u_link_lab": 1.0e-16, "u_link_tai": 2.1e-16,
        "dead_time_fraction": 0.006
    });
    fs::write(&path, rec.to_string()).unwrap();
    let v = stdout_json(&run(&["compare", "--record", p(&path)]));
    assert!((v["d_fountain_utclab_1e16"].as_f64().unwrap() - 2.3).abs() < 1e-9);
    assert!((v["d_fountain_utc_1e16"].as_f64().unwrap() - 2.8).abs() < 1e-9);
    assert!((v["u_total_1e16"].as_f64().unwrap() - 4.0).abs() < 0.05);
    assert_eq!(v["uptime_percent"].as_f64().unwrap(), 99.4);

    fs::write(&path, serde_json::json!([rec, rec]).to_string()).unwrap();
    let v = stdout_json(&run(&["compare", "--record", p(&path)]));
    assert_eq!(v.as_array().unwrap().len(), 2);
}

#[test]
fn compare_from_series() {
    let dir = tempfile::tempdir().unwrap();
    let maser = dir.path().join("maser.csv");
    let utc = dir.path().join("utc.csv");
    let mut m = String::from("mjd,y_fountain_maser\n");
    for d in 0..10 {
        m.push_str(&format!("{},2e-16\n", 60000.0 + d as f64));
    }
    fs::write(&maser, m).unwrap();
    // 0.864 ns over 10 days = 1e-15
    fs::write(&utc, "mjd,utc_minus_utclab_ns\n60000,0\n60005,0.432\n60010,0.864\n").unwrap();
    let v = stdout_json(&run(&[
        "compare",
        "--maser",
        p(&maser),
        "--utc",
        p(&utc),
        "--start",
        "60000",
        "--end",
        "60010",
        "--y-maser-lab",
        "-1e-16",
        "--uncertainties",
        "3e-16,0,4e-16,0",
    ]));
    assert!((v["d_fountain_utclab_1e16"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((v["d_fountain_utc_1e16"].as_f64().unwrap() - -9.0).abs() < 1e-6);
    assert!((v["u_total_1e16"].as_f64().unwrap() - 5.0).abs() < 1e-9);
    assert_eq!(v["uptime_percent"].as_f64().unwrap(), 100.0);
}

#[test]
fn fringe_lineshape() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["fringe", "--out", p(dir.path()), "--points", "201", "--span-hz", "2"]);
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("fringe.csv")).unwrap();
    assert_eq!(csv.lines().count(), 202);
    assert!(csv.lines().any(|l| l == "0.0,1.0"));
    let s: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("fringe.json")).unwrap()).unwrap();
    let fwhm = s["fwhm_hz"].as_f64().unwrap();
    assert!((0.88..=0.98).contains(&fwhm), "{fwhm}");
    assert!(s["contrast"].as_f64().unwrap() >= 0.95);
}

#[test]
fn constants_file_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("constants.json");
    fs::write(&path, r#"{ "temperature_k": 300.0 }"#).unwrap();
    let base = stdout_json(&run(&["eval-environment"]));
    let o = bin()
        .args(["eval-environment"])
        .env("FOUNTAIN_EVAL_CONSTANTS", &path)
        .output()
        .unwrap();
    let hot = stdout_json(&o);
    assert!((base["bbr_shift"].as_f64().unwrap() * 1e16 + 165.9).abs() < 0.2);
    assert!(hot["bbr_shift"].as_f64().unwrap() < base["bbr_shift"].as_f64().unwrap());

    fs::write(&path, "{ not json").unwrap();
    let o = bin()
        .args(["eval-environment"])
        .env("FOUNTAIN_EVAL_CONSTANTS", &path)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_record(&o)["error"], "parse");
}

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

fn delayfb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_delayfb")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = delayfb(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Rows of a CSV body keyed by column name, skipping the header comment.
fn rows(csv: &str) -> Vec<BTreeMap<String, String>> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let cols: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines.map(|l| cols.iter().cloned().zip(l.split(',').map(String::from)).collect()).collect()
}

fn num(r: &BTreeMap<String, String>, k: &str) -> f64 {
    r[k].parse().unwrap()
}

#[test]
fn chi_default_has_six_curves() {
    let rs = rows(&ok(&["chi"]));
    let mut keys: Vec<(String, String)> = rs.iter().map(|r| (r["curve"].clone(), r["gamma_tau"].clone())).collect();
    keys.dedup();
    assert_eq!(keys.len(), 6);
}

#[test]
fn chi_single_curves_match_closed_forms() {
    for r in rows(&ok(&["chi", "--tau", "0"])) {
        let t = num(&r, "gamma_t");
        assert!((num(&r, "chi") - (-0.05 * t).exp()).abs() < 1e-12);
    }
    for r in rows(&ok(&["chi", "--g", "0", "--tau", "1"])) {
        let t = num(&r, "gamma_t");
        assert!((num(&r, "chi") - (-0.5 * t).exp()).abs() < 1e-12);
    }
}

#[test]
fn header_reproduces_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.csv");
    ok(&["coherence", "--tau", "0.01", "--eta", "0.9", "--points", "21", "-o", first.to_str().unwrap()]);
    let again = ok(&["coherence", "--config", first.to_str().unwrap()]);
    assert_eq!(std::fs::read_to_string(&first).unwrap(), again);
    let wrong = delayfb(&["chi", "--config", first.to_str().unwrap()]);
    assert_eq!(wrong.status.code(), Some(1));
}

#[test]
fn pdist_slices_normalised_and_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("s.json");
    ok(&["pdist", "--summary", summary.to_str().unwrap(), "-o", dir.path().join("p.csv").to_str().unwrap()]);
    let s: Vec<serde_json::Value> = serde_json::from_str(&std::fs::read_to_string(summary).unwrap()).unwrap();
    let mut contrast = BTreeMap::new();
    for slice in &s {
        assert!((slice["integral"].as_f64().unwrap() - 1.0).abs() < 1e-6, "{slice}");
        if (slice["gamma_t"].as_f64().unwrap() - 0.1).abs() < 1e-12 {
            contrast.insert(slice["curve"].as_str().unwrap().to_string(), slice["fringe_contrast"].as_f64().unwrap());
        }
    }
    let (a, b, c) = (contrast["panel-a"], contrast["panel-b"], contrast["panel-c"]);
    assert!(a < 0.05 && b > 0.5 && a < c && c < b);
}

#[test]
fn coherence_curves_start_at_one() {
    for r in rows(&ok(&["coherence"])) {
        if num(&r, "gamma_t") == 0.0 {
            assert!((num(&r, "coherence") - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn trajectories_deterministic_with_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("s.json");
    let args = ["trajectories", "--seeds", "0..9", "--oracle", "--summary", summary.to_str().unwrap()];
    let a = ok(&args);
    let b = ok(&args);
    assert_eq!(a, b);
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    let oracle = s["oracle"].as_array().unwrap();
    assert_eq!(oracle.len(), 10);
    for o in oracle {
        assert!(o["min_fidelity"].as_f64().unwrap() >= 1.0 - 1e-3);
    }
}

#[test]
fn theta_sweep_keeps_asymptotic_modulus() {
    let out = ok(&[
        "trajectories",
        "--seeds",
        "4",
        "--thetas",
        "0.3,1.0,2.0",
        "--t-max",
        "0.05",
        "--points",
        "11",
        "--dt",
        "1e-3",
    ]);
    let mut by_t: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in rows(&out) {
        let m = num(&r, "cw_asym_re").hypot(num(&r, "cw_asym_im"));
        by_t.entry(r["gamma_t"].clone()).or_default().push(m);
    }
    for ms in by_t.values() {
        assert_eq!(ms.len(), 3);
        assert!(ms.iter().all(|m| (m - ms[0]).abs() < 1e-14));
    }
}

#[test]
fn dumps_are_written() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "trajectories",
        "--seeds",
        "1,2",
        "--t-max",
        "0.01",
        "--dt",
        "1e-3",
        "--dump-dir",
        dir.path().to_str().unwrap(),
    ]);
    let names: Vec<String> =
        std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert_eq!(names.len(), 4);
    let csv = names.iter().find(|n| n.ends_with(".csv")).unwrap();
    let text = std::fs::read_to_string(Path::new(dir.path()).join(csv)).unwrap();
    assert!(text.starts_with("t,amp_re,amp_im,weight_re,weight_im,w\n"));
}

#[test]
fn errors_and_usage_set_exit_codes() {
    assert_eq!(delayfb(&["chi", "--eta", "1.5"]).status.code(), Some(1));
    assert_eq!(delayfb(&["trajectories", "--tau", "0.1", "--seeds", "0"]).status.code(), Some(1));
    assert_eq!(delayfb(&["trajectories", "--seeds", "5..2"]).status.code(), Some(1));
    assert_eq!(delayfb(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn verify_reports_pass() {
    let out = delayfb(&["verify"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["all_passed"], true);
}

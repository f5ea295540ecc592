use assert_cmd::Command;
use predicates::prelude::*;
use predicates::str::contains;

fn magent() -> Command {
    Command::cargo_bin("magent").unwrap()
}

fn read(dir: &tempfile::TempDir, name: &str) -> String {
    std::fs::read_to_string(dir.path().join(name)).unwrap()
}

#[test]
fn sample_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    magent()
        .current_dir(&dir)
        .args([
            "sample", "--da", "2", "--db", "2", "--samples", "10000", "--seed", "7", "--out",
            "run.csv", "--deterministic",
        ])
        .assert()
        .success();
    let csv = read(&dir, "run.csv");
    assert!(csv.starts_with("sample_index,e_lin,m_lin\n"));
    assert_eq!(csv.lines().count(), 10001);
    let meta: serde_json::Value = serde_json::from_str(&read(&dir, "run.json")).unwrap();
    assert_eq!(meta["config"]["run"]["seed"], 7);
    assert!(meta["summary"]["mean_m"].is_f64());
    assert!(meta["reference"]["cov_e_m"].as_f64().unwrap().abs() < 1e-15);
    // Covariance of E_lin and M_lin is zero; the run should sit within a
    // few standard errors of it.
    let cov = meta["summary"]["cov"].as_f64().unwrap();
    let se = meta["summary"]["se_cov"].as_f64().unwrap();
    assert!(cov.abs() < 4.0 * se, "cov {cov} vs se {se}");
    assert!(meta.get("timestamp").is_none());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.csv", "b.csv"] {
        magent()
            .current_dir(&dir)
            .args([
                "sample", "--n", "3", "--samples", "200", "--seed", "42", "--out", name,
                "--deterministic",
            ])
            .assert()
            .success();
    }
    assert_eq!(read(&dir, "a.csv"), read(&dir, "b.csv"));
    let a = read(&dir, "a.json").replace("a.csv", "");
    let b = read(&dir, "b.json").replace("b.csv", "");
    assert_eq!(a, b);
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    for (name, workers) in [("w1.csv", "1"), ("w3.csv", "3")] {
        magent()
            .current_dir(&dir)
            .args([
                "sample", "--da", "2", "--db", "4", "--samples", "300", "--seed", "9",
                "--workers", workers, "--out", name, "--deterministic",
            ])
            .assert()
            .success();
    }
    assert_eq!(read(&dir, "w1.csv"), read(&dir, "w3.csv"));
}

#[test]
fn json_format_holds_the_same_records() {
    let dir = tempfile::tempdir().unwrap();
    magent()
        .current_dir(&dir)
        .args([
            "sample", "--da", "2", "--db", "2", "--samples", "50", "--seed", "1", "--out",
            "run.csv", "--deterministic",
        ])
        .assert()
        .success();
    magent()
        .current_dir(&dir)
        .args([
            "sample", "--da", "2", "--db", "2", "--samples", "50", "--seed", "1", "--out",
            "run.jsonl", "--format", "json", "--deterministic",
        ])
        .assert()
        .success();
    let doc: serde_json::Value = serde_json::from_str(&read(&dir, "run.jsonl")).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 50);
    let csv = read(&dir, "run.csv");
    let first_csv: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let e_csv: f64 = first_csv[1].parse().unwrap();
    assert_eq!(e_csv, rows[0][1].as_f64().unwrap());
}

#[test]
fn rejects_non_qubit_bipartition() {
    magent()
        .args(["sample", "--da", "3", "--db", "2", "--samples", "10", "--seed", "1"])
        .assert()
        .failure()
        .stderr(contains("power of two"));
}

#[test]
fn seed_is_mandatory() {
    magent()
        .args(["sample", "--da", "2", "--db", "2", "--samples", "10"])
        .assert()
        .failure()
        .stderr(contains("--seed"));
}

#[test]
fn orbit_checks_the_spectrum() {
    magent()
        .args([
            "orbit", "--da", "2", "--db", "2", "--lambda", "0.7,0.7", "--samples", "10",
            "--seed", "1",
        ])
        .assert()
        .failure()
        .stderr(contains("sums to"));
    magent()
        .args([
            "orbit", "--da", "2", "--db", "2", "--lambda", "0.5,0.3,0.2", "--samples", "10",
            "--seed", "1",
        ])
        .assert()
        .failure()
        .stderr(contains("d_A"));
}

#[test]
fn orbit_on_a_product_spectrum_has_constant_zero_entanglement() {
    let dir = tempfile::tempdir().unwrap();
    magent()
        .current_dir(&dir)
        .args([
            "orbit", "--da", "2", "--db", "2", "--lambda", "1,0", "--samples", "400",
            "--seed", "5", "--out", "o.csv", "--deterministic",
        ])
        .assert()
        .success();
    let meta: serde_json::Value = serde_json::from_str(&read(&dir, "o.json")).unwrap();
    assert!(meta["reference"]["e_lin"].as_f64().unwrap().abs() < 1e-12);
    let mbar = meta["reference"]["orbit_mean_m"].as_f64().unwrap();
    assert!((mbar - 0.36).abs() < 1e-12, "separable orbit mean {mbar}");
    let mean_e = meta["summary"]["mean_e"].as_f64().unwrap();
    assert!(mean_e.abs() < 1e-12, "orbit should fix e at 0, got {mean_e}");
    let z = meta["reference"]["z_score"].as_f64().unwrap();
    assert!(z.abs() < 4.0, "z = {z}");
}

#[test]
fn conditional_closed_form_column_only_for_qubit_a_side() {
    let dir = tempfile::tempdir().unwrap();
    magent()
        .current_dir(&dir)
        .args([
            "conditional", "--da", "2", "--db", "4", "--samples", "4000", "--seed", "3",
            "--bins", "8", "--out", "c2.csv", "--deterministic",
        ])
        .assert()
        .success();
    magent()
        .current_dir(&dir)
        .args([
            "conditional", "--da", "4", "--db", "4", "--samples", "4000", "--seed", "3",
            "--bins", "8", "--out", "c4.csv", "--deterministic",
        ])
        .assert()
        .success();
    let c2 = read(&dir, "c2.csv");
    let mut lines = c2.lines();
    assert_eq!(
        lines.next().unwrap(),
        "e_center,cond_mean_m,cond_se,count,closed_form_m"
    );
    for line in lines {
        assert!(!line.ends_with(','), "closed-form column missing in {line}");
    }
    for line in read(&dir, "c4.csv").lines().skip(1) {
        assert!(line.ends_with(','), "unexpected closed form in {line}");
    }
}

#[test]
fn hist2d_reports_distances() {
    let dir = tempfile::tempdir().unwrap();
    magent()
        .current_dir(&dir)
        .args([
            "hist2d", "--n", "4", "--samples", "5000", "--seed", "2", "--bins", "10",
            "--out", "h.csv", "--deterministic",
        ])
        .assert()
        .success();
    let csv = read(&dir, "h.csv");
    assert_eq!(csv.lines().count(), 101);
    let meta: serde_json::Value = serde_json::from_str(&read(&dir, "h.json")).unwrap();
    assert!(meta["distances"]["kl"].as_f64().unwrap() > 0.0);
    assert!(meta["distances"]["l1"].as_f64().unwrap() > 0.0);
}

#[test]
fn closed_form_prints_exact_values() {
    magent()
        .args(["closed-form", "--da", "2", "--db", "4"])
        .assert()
        .success()
        .stdout(contains("mean_m_lin,7/11,"))
        .stdout(contains("orbit_mean_m_maxent,17/28,"));
}

#[test]
fn verify_suites_exit_zero_on_pass() {
    for suite in ["variance", "covariance"] {
        magent()
            .args(["verify", "--suite", suite])
            .assert()
            .success()
            .stdout(contains("pass").and(contains("fail").not()));
    }
}

#[test]
fn verify_rejects_unknown_suite() {
    magent()
        .args(["verify", "--suite", "nonsense"])
        .assert()
        .failure()
        .stderr(contains("invalid value"));
}

#[test]
fn gauss_check_single_n_has_no_monotone_flag() {
    let dir = tempfile::tempdir().unwrap();
    magent()
        .current_dir(&dir)
        .args([
            "gauss-check", "--n-min", "4", "--n-max", "4", "--samples", "3000", "--seed",
            "8", "--bins", "40", "--out", "g.csv", "--deterministic",
        ])
        .assert()
        .success();
    let csv = read(&dir, "g.csv");
    assert_eq!(csv.lines().count(), 2);
    let meta: serde_json::Value = serde_json::from_str(&read(&dir, "g.json")).unwrap();
    assert!(meta.get("monotone").is_none());
    // 3000 samples over a 40x40 grid is sparse, so the occupancy warning
    // must be raised.
    assert!(meta["warning"].as_str().unwrap().contains("occupancy"));
}

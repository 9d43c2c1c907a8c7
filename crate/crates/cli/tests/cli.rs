use std::path::Path;
use std::process::{Command, Output};

fn pairdiag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pairdiag")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn core_fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

#[test]
fn required_n_matches_the_worked_example() {
    let o = pairdiag(&["required-n", "0.65", "0.60", "--rho", "0.30"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().next(), Some("1028"));
}

#[test]
fn mcnemar_prints_both_p_values() {
    let o = pairdiag(&["mcnemar", "295", "249"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("p_chi2=0.049 p_exact=0.054"), "{}", stdout(&o));
}

#[test]
fn missing_input_is_a_data_error() {
    let o = pairdiag(&["diagnose", "missing.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.csv"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = pairdiag(&["mcnemar", "3", "4", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn out_of_range_value_names_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "item_id,a,b\nq1,1,0\nq2,1.5,1\n").unwrap();
    let o = pairdiag(&["diagnose", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn diagnose_counts_json_reports_the_unresolved_pairs() {
    let o = pairdiag(&[
        "diagnose",
        &core_fixture("mmlupro_adjacent.csv"),
        "--counts",
        "--b-reps",
        "200",
        "--json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["seed"], 42);
    assert_eq!(v["family_summary"]["unresolved_fixed_n"], 4);
    assert_eq!(v["family_summary"]["unresolved_anytime"], 5);
}

#[test]
fn gen_then_diagnose_and_cluster_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("m.csv");
    let ci = dir.path().join("ci.csv");
    let verdicts = dir.path().join("v.csv");
    let m = matrix.to_str().unwrap();
    let o = pairdiag(&["gen", "--n", "600", "--clusters", "6", "--seed", "7", "--out", m]);
    assert!(o.status.success());
    assert!(std::fs::read_to_string(&matrix).unwrap().starts_with("item_id,cluster,a,b"));

    let o = pairdiag(&["diagnose", m, "--b-reps", "100", "--verdicts", verdicts.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("seed=42"), "{}", stdout(&o));
    assert_eq!(std::fs::read_to_string(&verdicts).unwrap().lines().count(), 2);

    let o = pairdiag(&["cluster", m, "--bootstrap", "50", "--loso", "--out", ci.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("leave one cluster out"));
    assert!(std::fs::read_to_string(&ci).unwrap().starts_with("pair,icc_pt,icc_lo,icc_hi"));
}

#[test]
fn eprocess_stream_writes_a_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("m.csv");
    let traj = dir.path().join("t.csv");
    let m = matrix.to_str().unwrap();
    assert!(pairdiag(&["gen", "--n", "3000", "--delta", "0.1", "--out", m]).status.success());
    let o = pairdiag(&["eprocess", "stream", m, "--a", "a", "--b", "b", "--trajectory", traj.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("true"));
    assert!(std::fs::read_to_string(&traj).unwrap().starts_with("n,log_e,threshold"));
}

#[test]
fn shortcut_audit_writes_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("audit.csv");
    let o = pairdiag(&["shortcut-audit", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 1 + 54);
}

#[test]
fn calibrate_is_reproducible_under_a_seed() {
    let args = ["calibrate", "--p", "0.7", "--rho-z", "0.4", "--trials", "200", "--b-reps", "100", "--json"];
    let a = pairdiag(&args);
    let b = pairdiag(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

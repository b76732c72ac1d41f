use std::path::Path;
use std::process::{Command, Output};

use spdalign::protocol::load_reports_json;
use spdalign::Method;

fn spdalign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spdalign")).args(args).output().unwrap()
}

fn synth(dir: &Path) -> String {
    let out = dir.join("data");
    let s = out.to_str().unwrap().to_string();
    let o = spdalign(&["synth", "--n-source", "60", "--n-target", "60", "--dim", "5", "--out", &s]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    s
}

#[test]
fn adapt_prints_one_line_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let o = spdalign(&[
        "adapt", "--data-root", &data, "--source", "source", "--target", "target", "--method", "NA", "--method", "GCA1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let names: Vec<&str> = stdout.lines().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(names, ["NA", "GCA1"]);
}

#[test]
fn protocol_report_round_trips_through_report_command() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let json = dir.path().join("out.json");
    let o = spdalign(&[
        "protocol", "--data-root", &data, "--source", "source", "--target", "target", "--method", "CORAL", "--method",
        "GCA2", "--trials", "4", "--samples-per-class", "10", "--out", json.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let reports = load_reports_json(&json).unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0].method, Method::Coral);
    assert_eq!(reports[1].per_trial.len(), 4);

    let again = dir.path().join("again.json");
    let o = spdalign(&["report", "--input", json.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(load_reports_json(&again).unwrap(), reports);

    let o = spdalign(&["report", "--input", json.to_str().unwrap(), "--reference", "CORAL", "--format", "csv"]);
    assert!(o.status.success());
    let summary = String::from_utf8(o.stdout).unwrap();
    assert!(summary.lines().count() >= 2);
}

#[test]
fn missing_dataset_exits_with_data_code() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_str().unwrap();
    let o = spdalign(&["adapt", "--data-root", root, "--source", "amazon", "--target", "webcam"]);
    assert_eq!(o.status.code(), Some(3));
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert!(stderr.contains("amazon.csv"), "{stderr}");
}

#[test]
fn malformed_csv_exits_with_data_code() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.csv"), "f0,f1,label\n1.0,2.0,0\n1.0,oops,1\n").unwrap();
    std::fs::write(dir.path().join("b.csv"), "f0,f1,label\n1.0,2.0,0\n3.0,1.0,1\n").unwrap();
    let root = dir.path().to_str().unwrap();
    let o = spdalign(&["adapt", "--data-root", root, "--source", "a", "--target", "b"]);
    assert_eq!(o.status.code(), Some(3));
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert!(stderr.contains("line 3"), "{stderr}");
}

#[test]
fn out_of_range_weight_exits_with_contract_code() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let o = spdalign(&[
        "adapt", "--data-root", &data, "--source", "source", "--target", "target", "--method", "GCA1", "--t", "1.5",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_method_is_rejected() {
    let o = spdalign(&["adapt", "--source", "a", "--target", "b", "--method", "GFK"]);
    assert_eq!(o.status.code(), Some(2));
}

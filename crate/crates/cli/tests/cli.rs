use std::path::Path;
use std::process::{Command, Output};

fn epl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epl")).args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn passing_builtin_exits_zero() {
    let o = epl(&["run", "halfspace_corner"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("scenario halfspace_corner"));
}

#[test]
fn exit_codes_follow_the_worst_verdict() {
    let failing = epl(&["run", &fixture("failing.json")]);
    assert_eq!(failing.status.code(), Some(1));
    assert!(stdout(&failing).contains("fail"));
    let unsure = epl(&["run", &fixture("inconclusive.json")]);
    assert_eq!(unsure.status.code(), Some(2));
    assert!(stdout(&unsure).contains("not in set"));
}

#[test]
fn schema_errors_exit_three_with_pointer() {
    let o = epl(&["run", &fixture("unknown_check.json")]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/checks/0/spec/check"));
    assert_eq!(epl(&["run", "no_such_scenario"]).status.code(), Some(3));
    assert_eq!(epl(&["project", "--set", "{", "--point", "[0,0]"]).status.code(), Some(3));
}

#[test]
fn builtins_are_listed() {
    let o = epl(&["builtins"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in ["parabola_pair", "neg_norm_rank_one", "km_rated_normals", "km_aqc", "sip_demo"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn json_report_is_written_to_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = epl(&["run", "halfspace_corner", "--format", "json", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["scenario"], "halfspace_corner");
    assert!(v["checks"].as_array().is_some_and(|c| !c.is_empty()));
}

#[test]
fn csv_format_writes_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = epl(&["run", "sip_demo", "--format", "csv", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.lines().count() > 1);
}

#[test]
fn normalized_reports_do_not_depend_on_workers() {
    let run = |w: &str| stdout(&epl(&["run", "neg_norm_rank_one", "--format", "json", "--normalize-timings", "--workers", w]));
    let one = run("1");
    assert!(one.contains("\"timings_normalized\": true"));
    assert_eq!(one, run("4"));
    assert_eq!(one, run("1"));
}

#[test]
fn single_check_subcommands() {
    let o = epl(&["project", "--set", r#"{"family":"ball","center":[0,0],"radius":1}"#, "--point", "[2,0]"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("projection"));
    let o = epl(&["normal", "--set", r#"{"family":"halfspace","normal":[0,1],"offset":0}"#, "--point", "[0,0]", "--xstar", "[0,1]"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = epl(&["normal", "--set", r#"{"family":"halfspace","normal":[0,1],"offset":0}"#, "--point", "[0,0]", "--xstar", "[1,0]"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
}

use std::path::Path;

use statgeom::cli::{fixture, run, FIXTURE_IDS};

fn verify(args: &[&str]) -> i32 {
    let mut argv = vec!["statgeom", "verify"];
    argv.extend_from_slice(args);
    run(argv)
}

fn write_manifest(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn shipped_fixture_files_match_builtins() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    for id in FIXTURE_IDS {
        let text = std::fs::read_to_string(dir.join(format!("{id}.json"))).unwrap();
        let shipped = statgeom::cli::parse_manifest(&text).unwrap();
        assert_eq!(shipped.to_json(), fixture(id).unwrap().to_json(), "{id}");
    }
}

#[test]
fn passing_fixture_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let out_s = out.to_string_lossy();
    assert_eq!(verify(&["flat_split_n2", "--points", "8", "--report", &out_s]), 0);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["fixture"], "flat_split_n2");
    assert_eq!(report["points"], 8);
    assert_eq!(report["summary"]["fail"], 0);
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = fixture("hyperbolic_split_kl_distinct").unwrap();
    m.checks = vec![statgeom::cli::manifest::CheckEntry::Name("kurose_constant".into())];
    let path = write_manifest(dir.path(), "m.json", &m.to_json());
    let out = dir.path().join("r.json");
    assert_eq!(verify(&[&path, "--report", &out.to_string_lossy()]), 1);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["checks"][0]["status"], "FAIL");
}

#[test]
fn manifest_problems_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.json");
    assert_eq!(verify(&[&missing.to_string_lossy()]), 2);
    let bad = write_manifest(dir.path(), "bad.json", "{\"id\": \"x\", \"unexpected\": 1}");
    assert_eq!(verify(&[&bad]), 2);
    let mut m = fixture("flat_split_n1").unwrap();
    m.checks = vec![statgeom::cli::manifest::CheckEntry::Name("no_such_check".into())];
    let unknown = write_manifest(dir.path(), "unknown.json", &m.to_json());
    assert_eq!(verify(&[&unknown]), 2);
    let mut m = fixture("flat_split_n1").unwrap();
    m.checks = vec![statgeom::cli::manifest::CheckEntry::Name("oneill_identities".into())];
    let no_sub = write_manifest(dir.path(), "nosub.json", &m.to_json());
    assert_eq!(verify(&[&no_sub]), 2);
}

#[test]
fn errored_check_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = fixture("flat_split_n1").unwrap();
    m.metric.as_mut().unwrap().insert("x1,x1".into(), "0".into());
    m.metric.as_mut().unwrap().insert("y1,y1".into(), "0".into());
    let path = write_manifest(dir.path(), "degenerate.json", &m.to_json());
    let out = dir.path().join("r.json");
    assert_eq!(verify(&[&path, "--report", &out.to_string_lossy()]), 2);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(report["summary"]["error"].as_u64().unwrap() > 0);
}

#[test]
fn repeated_runs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        assert_eq!(verify(&["expfam_normal", "--seed", "11", "--points", "6", "--report", &out.to_string_lossy()]), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = dir.path().join("c.json");
    verify(&["expfam_normal", "--seed", "12", "--points", "6", "--report", &c.to_string_lossy()]);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn informational_commands_exit_zero() {
    assert_eq!(run(["statgeom", "list-fixtures"]), 0);
    assert_eq!(run(["statgeom", "describe", "expfam_poisson"]), 0);
    assert_eq!(run(["statgeom", "describe", "nope"]), 2);
    assert_eq!(run(["statgeom", "frobnicate"]), 2);
}

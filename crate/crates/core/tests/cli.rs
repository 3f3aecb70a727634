use std::path::Path;
use std::process::Command;

fn mfield() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mfield"));
    c.env("SOURCE_DATE_EPOCH", "0");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn empty_operation_list_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "empty.json", r#"{"name": "empty"}"#);
    let out = dir.path().join("out");
    let status = mfield().arg("run").arg(&s).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["checks"].as_array().unwrap().len(), 0);
    assert_eq!(report["pass"], true);
}

#[test]
fn schema_error_exits_two_with_path_and_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(
        dir.path(),
        "bad.json",
        r#"{"name": "bad", "checks": [{"check": "markov", "mesh": "t", "mass": "heavy", "omega": {"vertices": [0]}}]}"#,
    );
    let out = dir.path().join("out");
    let o = mfield().arg("run").arg(&s).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("checks[0].mass"), "{err}");
    assert!(!out.exists());
}

#[test]
fn corrupted_mesh_file_exits_two_with_no_output() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "mesh.json", r#"{"vertices": 3, "stiffness": [[0, 1, "#);
    let s = write(
        dir.path(),
        "s.json",
        r#"{"name": "m", "meshes": {"broken": {"file": "mesh.json"}},
            "vectors": {"d": {"delta": 0}},
            "checks": [{"check": "decomp", "mesh": "broken", "mass": 1.0, "omega": {"vertices": [0]}, "vectors": ["d"]}]}"#,
    );
    let out = dir.path().join("out");
    let o = mfield().arg("run").arg(&s).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("meshes.broken.file"));
    assert!(!out.exists());
}

#[test]
fn failing_check_exits_one_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    // Rounding leaves the pre-Markov residual strictly positive.
    let o = mfield()
        .args(["verify", "decomp", "--tol", "0"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], false);
    assert_eq!(report["checks"][0]["tolerance_source"], "cli");
    assert_eq!(report["checks"][0]["tolerance"], 0.0);
}

#[test]
fn mesh_file_round_trips_through_a_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("torus.json");
    let status = mfield()
        .args(["mesh", "torus", "--nx", "5", "--ny", "4", "--out"])
        .arg(&mesh)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let s = write(
        dir.path(),
        "s.json",
        r#"{"name": "file-mesh", "meshes": {"t": {"file": "torus.json"}},
            "vectors": {"b": {"bump": {"center": 6, "radius": 1}}},
            "checks": [{"check": "decomp", "mesh": "t", "mass": 1.0, "omega": {"ball": {"center": 6, "radius": 1}}, "vectors": ["b"]}]}"#,
    );
    let out = dir.path().join("out");
    let status = mfield().arg("run").arg(&s).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let report = std::fs::read_to_string(out.join("report.json")).unwrap();
    assert!(report.contains("mesh:t"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, parallel) in [(&a, false), (&b, true)] {
        let mut c = mfield();
        c.args(["verify", "interact", "--seed", "9"]).arg("--out").arg(out);
        if parallel {
            c.arg("--parallel");
        }
        assert_eq!(c.status().unwrap().code(), Some(0));
    }
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 2);
    for n in names {
        assert_eq!(std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn seed_override_changes_the_hash_only_through_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let read_hash = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        mfield()
            .args(["verify", "markov", "--seed", seed])
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        r["hash"].as_str().unwrap().to_string()
    };
    assert_eq!(read_hash("1", "x"), read_hash("1", "y"));
    assert_ne!(read_hash("1", "x"), read_hash("2", "z"));
}

#[test]
fn every_bundled_scenario_passes() {
    let dir = tempfile::tempdir().unwrap();
    for name in [
        "torus-markov",
        "markov",
        "reflection_positivity",
        "massless_reflection_positivity",
        "sewing",
        "interacting_markov",
    ] {
        let o = mfield()
            .args(["verify", name, "--out"])
            .arg(dir.path().join(name))
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&o.stdout));
    }
}

#[test]
fn torus_markov_reports_small_premarkov_residual() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tm");
    mfield().args(["verify", "torus-markov", "--out"]).arg(&out).status().unwrap();
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let res = r["checks"][0]["values"]["premarkov_residual"].as_f64().unwrap();
    assert!(res <= 1e-10, "{res}");
}

#[test]
fn unknown_verify_target_exits_two() {
    let o = mfield().args(["verify", "nothing"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

use std::path::Path;
use std::process::{Command, Output};

fn glab(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_glab"));
    cmd.args(args).current_dir(dir);
    for var in [
        "GLAB_SEED",
        "GLAB_OUT",
        "GLAB_FORMAT",
        "GLAB_THREADS",
        "GLAB_CONFIG",
    ] {
        cmd.env_remove(var);
    }
    cmd.envs(env.iter().copied());
    cmd.output().expect("glab runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn report(dir: &Path, command: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{command}.json"))).unwrap())
        .unwrap()
}

fn rows(csv: &Path) -> usize {
    std::fs::read_to_string(csv).unwrap().lines().count() - 1
}

#[test]
fn exact_homomorphism_has_an_empty_defect_curve() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "exact.json", r#"{"amplitude": 0.0}"#);
    let out = glab(d.path(), &["average", "--config", &cfg, "--out", "o"], &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(rows(&d.path().join("o/average_defect_curve.csv")), 0);
    assert_eq!(report(&d.path().join("o"), "average")["status"], "passed");
}

#[test]
fn su2_default_converges_within_six_steps() {
    let d = tempfile::tempdir().unwrap();
    let out = glab(d.path(), &["average", "--out", "o"], &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let n = rows(&d.path().join("o/average_defect_curve.csv"));
    assert!((1..=6).contains(&n), "{n} rows");
}

#[test]
fn large_initial_defect_exits_two() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "big.json", r#"{"amplitude": 3.0}"#);
    let out = glab(d.path(), &["average", "--config", &cfg, "--out", "o"], &[]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        report(&d.path().join("o"), "average")["status"],
        "defect_too_large"
    );
}

#[test]
fn config_errors_exit_four() {
    let d = tempfile::tempdir().unwrap();
    let missing = glab(d.path(), &["action", "--config", "nowhere.json"], &[]);
    assert_eq!(missing.status.code(), Some(4));
    let unknown = write(d.path(), "unknown.json", r#"{"energys": [1.0]}"#);
    assert_eq!(
        glab(d.path(), &["action", "--config", &unknown], &[])
            .status
            .code(),
        Some(4)
    );
    let empty = write(d.path(), "empty.json", r#"{"criteria": []}"#);
    assert_eq!(
        glab(d.path(), &["suite", "--config", &empty], &[])
            .status
            .code(),
        Some(4)
    );
    let bad_id = write(
        d.path(),
        "bad.json",
        r#"{"criteria": [{"id": "gkr"}, {"id": "gkr"}]}"#,
    );
    assert_eq!(
        glab(d.path(), &["suite", "--config", &bad_id], &[])
            .status
            .code(),
        Some(4)
    );
    assert!(!d.path().join("glab-out").exists());
}

#[test]
fn injected_tolerance_fails_only_its_criterion() {
    let d = tempfile::tempdir().unwrap();
    let m = write(
        d.path(),
        "m.json",
        r#"{"criteria": [
            {"id": "mineur_arnold", "tolerances": {"oscillator": 1e-30}},
            {"id": "abelian_one_step"},
            {"id": "affine_convexity"}
        ]}"#,
    );
    let out = glab(d.path(), &["suite", "--config", &m, "--out", "o"], &[]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&d.path().join("o"), "suite");
    let verdicts: Vec<(String, bool)> = r["result"]["criteria"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| {
            (
                c["id"].as_str().unwrap().to_string(),
                c["passed"].as_bool().unwrap(),
            )
        })
        .collect();
    assert_eq!(
        verdicts,
        vec![
            ("mineur_arnold".into(), false),
            ("abelian_one_step".into(), true),
            ("affine_convexity".into(), true)
        ]
    );
}

#[test]
fn flag_beats_env_beats_file() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "m.json", r#"{"seed": 11, "samples": 500}"#);
    let seed = |dir: &str| {
        report(&d.path().join(dir), "momentum")["seeds"]["samples"]
            .as_u64()
            .unwrap()
    };

    glab(
        d.path(),
        &["momentum", "--config", &cfg, "--out", "file"],
        &[],
    );
    assert_eq!(seed("file"), 11);

    let out = glab(
        d.path(),
        &["momentum"],
        &[
            ("GLAB_CONFIG", &cfg),
            ("GLAB_SEED", "12"),
            ("GLAB_OUT", "env"),
        ],
    );
    assert!(out.status.success() || out.status.code() == Some(1));
    assert_eq!(seed("env"), 12);

    glab(
        d.path(),
        &["momentum", "--seed", "13", "--out", "flag"],
        &[("GLAB_CONFIG", &cfg), ("GLAB_SEED", "12")],
    );
    assert_eq!(seed("flag"), 13);
    assert_eq!(
        report(&d.path().join("flag"), "momentum")["config"]["samples"],
        500
    );
}

#[test]
fn json_format_writes_json_tables() {
    let d = tempfile::tempdir().unwrap();
    let out = glab(
        d.path(),
        &["action", "--format", "json", "--threads", "3", "--out", "o"],
        &[],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let t: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(d.path().join("o/action_action.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(t["rows"].as_array().unwrap().len(), 3);
    assert_eq!(report(&d.path().join("o"), "action")["threads"], 3);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "p.json", r#"{"samples": 3000}"#);
    for dir in ["a", "b"] {
        glab(d.path(), &["phi-set", "--config", &cfg, "--out", dir], &[]);
    }
    let names: Vec<_> = std::fs::read_dir(d.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert!(names.len() >= 2);
    for n in names {
        assert_eq!(
            std::fs::read(d.path().join("a").join(&n)).unwrap(),
            std::fs::read(d.path().join("b").join(&n)).unwrap()
        );
    }
}

#[test]
fn affine_check_refutes_a_counterexample() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "c.json", r#"{"complex": {"corpus": "cylinder"}}"#);
    let out = glab(
        d.path(),
        &["affine-check", "--config", &cfg, "--out", "o"],
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    let r = report(&d.path().join("o"), "affine-check");
    assert_eq!(r["result"]["accepted"], false);
    assert_eq!(r["result"]["witness_verified"], true);
}

use std::path::PathBuf;
use std::process::{Command, Output};

fn renormgb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_renormgb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn temp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("renormgb-cli-{}-{name}", std::process::id()))
}

fn read_json(path: &PathBuf) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn ball_invariant_is_minus_one() {
    let out = temp_path("ball.json");
    let run = renormgb(&[
        "invariant",
        "--builtin",
        "ball",
        "--n",
        "1",
        "--resolution",
        "48",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        run.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let report = read_json(&out);
    let value = report["integral_transgression"].as_f64().unwrap();
    assert!((value + 1.0).abs() < 1e-6);
    assert_eq!(report["flagged"], false);
    assert!((report["euler_side"]["index"].as_f64().unwrap() - 1.0).abs() < 1e-2);
}

#[test]
fn mobius_ball_invariant_is_minus_one() {
    let out = temp_path("mobius.json");
    let csv = temp_path("mobius.csv");
    let run = renormgb(&[
        "invariant",
        "--builtin",
        "mobius_ball",
        "--a",
        "0.3,0,0.1,0",
        "--n",
        "1",
        "--out",
        out.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(
        run.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let value = read_json(&out)["integral_transgression"].as_f64().unwrap();
    assert!((value + 1.0).abs() < 1e-5);
    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("node,re_z1,im_z1,re_z2,im_z2,scal"));
}

#[test]
fn malformed_domain_exits_with_one() {
    let path = temp_path("bad.json");
    std::fs::write(
        &path,
        "{\n  \"n\": 1,\n  \"kind\": \"polynomial\",\n  \"monomials\": [\n",
    )
    .unwrap();
    let run = renormgb(&["invariant", "--domain", path.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&run.stderr);
    assert!(stderr.contains("parse error at line"), "{stderr}");
}

#[test]
fn flagged_discrepancy_exits_with_two() {
    let run = renormgb(&[
        "invariant",
        "--builtin",
        "real_ellipsoid",
        "--t",
        "0.1",
        "--resolution",
        "8",
        "--tol-two-route-n1",
        "-1",
    ]);
    assert_eq!(
        run.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
}

#[test]
fn invalid_run_settings_exit_with_one() {
    for args in [
        vec!["invariant", "--builtin", "ball", "--resolution", "4"],
        vec!["invariant", "--builtin", "ball", "--workers", "0"],
        vec![
            "invariant",
            "--builtin",
            "real_ellipsoid",
            "--t",
            "0.1",
            "--stage",
            "4",
        ],
        vec!["verify", "--suite", "nonsense"],
    ] {
        assert_eq!(renormgb(&args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn verify_is_reproducible() {
    let first = renormgb(&["verify", "--suite", "identities", "--seed", "7"]);
    let second = renormgb(&[
        "verify",
        "--suite",
        "identities",
        "--seed",
        "7",
        "--workers",
        "2",
    ]);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    assert!(String::from_utf8_lossy(&first.stdout)
        .lines()
        .all(|l| l.ends_with("pass")));
}

#[test]
fn fefferman_table_has_every_stage() {
    let run = renormgb(&[
        "fefferman",
        "--builtin",
        "real_ellipsoid",
        "--t",
        "0.1",
        "--n",
        "1",
    ]);
    assert_eq!(run.status.code(), Some(0));
    let text = String::from_utf8_lossy(&run.stdout);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("ray_id,stage,slope,fit_residual,constant,calibrated")
    );
    let stages: Vec<usize> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    for s in 1..=3 {
        assert!(stages.contains(&s));
    }
}

#[test]
fn index_of_a_reflection() {
    let run = renormgb(&["index", "--field", "reflection", "--n", "1"]);
    assert_eq!(run.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(doc["expected_index"], -1);
    assert_eq!(doc["trivial"]["index"], -1);
    assert_eq!(doc["metric"]["index"], -1);
}

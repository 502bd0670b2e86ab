use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const FREE: &str = r#"{
  "data": {"x": 1, "y": -1, "u": -0.1, "v": 0.1, "kappa_a": 0, "kappa_b": 0},
  "solver": {"schedule": [-100, -200]}
}"#;

fn fst(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fst")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn solve(dir: &TempDir, cfg: &Path) -> (Output, PathBuf) {
    let out = dir.path().join("out");
    (fst(&["solve", "--config", s(cfg), "--out", s(&out)]), out)
}

#[test]
fn free_motion_solve_writes_straight_lines() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "free.json", FREE);
    let (o, out) = solve(&dir, &cfg);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let conv: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("convergence.json")).unwrap()).unwrap();
    assert_eq!(conv["schema_version"], 1);
    assert_eq!(conv["converged"], true);
    assert!(conv["deltas"][0].as_f64().unwrap() < 1e-12);
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,a,adot,b,bdot"));
    for l in lines {
        let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[1] - (1.0 - 0.1 * v[0])).abs() < 1e-10);
        assert!((v[3] - (-1.0 + 0.1 * v[0])).abs() < 1e-10);
        assert_eq!(v[2], -0.1);
        assert_eq!(v[4], 0.1);
    }
    assert!(fs::read_to_string(out.join("trajectories.svg")).unwrap().starts_with("<svg"));
    assert!(out.join("gaps.svg").exists());
}

#[test]
fn check_passes_clean_and_fails_corrupted_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "free.json", FREE);
    let (o, out) = solve(&dir, &cfg);
    assert_eq!(code(&o), 0);
    let traj = out.join("trajectory.csv");
    let o = fst(&["check", "--traj", s(&traj), "--config", s(&cfg)]);
    assert_eq!(code(&o), 0, "{}{}", String::from_utf8_lossy(&o.stdout), stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["all_pass"], true);
    assert!(report["checks"].as_array().unwrap().len() >= 16);
    assert!(report["constants"]["V"].as_f64().unwrap() < 1.0);
    assert!(report["samples"].is_object());

    // A burst of wrong velocities in the middle of the grid.
    let text = fs::read_to_string(&traj).unwrap();
    let n = text.lines().count();
    let bad: Vec<String> = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if (n / 2..n / 2 + 50).contains(&i) {
                let mut f: Vec<&str> = l.split(',').collect();
                f[2] = "0.5";
                f.join(",")
            } else {
                l.to_string()
            }
        })
        .collect();
    let bad_path = write(dir.path(), "bad.csv", &(bad.join("\n") + "\n"));
    let o = fst(&["check", "--traj", s(&bad_path), "--config", s(&cfg)]);
    assert_eq!(code(&o), 2);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let failed: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"speed_and_separation"), "{failed:?}");
}

#[test]
fn config_errors_exit_1_with_lines() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        "{\n  \"data\": {\"x\": 1, \"y\": -1,\n    \"u\": 0.5, \"v\": 0.4, \"kappa_a\": 1, \"kappa_b\": 1}\n}\n",
    );
    let (o, _) = solve(&dir, &cfg);
    assert_eq!(code(&o), 1);
    let e = stderr(&o);
    assert!(e.contains("bad.json:3:") && e.contains("u < v"), "{e}");

    let cfg = write(dir.path(), "typo.json", &FREE.replace("\"schedule\"", "\"schedul\""));
    let (o, _) = solve(&dir, &cfg);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("typo.json:3:"), "{}", stderr(&o));

    let o = fst(&["solve"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn thread_cap_must_be_positive() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "free.json", FREE);
    let o = Command::new(env!("CARGO_BIN_EXE_fst"))
        .args(["solve", "--config", s(&cfg), "--out", s(&dir.path().join("o"))])
        .env("FST_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("FST_THREADS"));
}

#[test]
fn non_converged_schedule_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "short.json",
        r#"{"data": {"x": 1, "y": -1, "u": -0.4, "v": 0.4, "kappa_a": 1, "kappa_b": 1},
            "solver": {"schedule": [-100, -200], "tol_global": 1e-6}}"#,
    );
    let (o, out) = solve(&dir, &cfg);
    assert_eq!(code(&o), 2);
    assert!(out.join("trajectory.csv").exists());
    let conv: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("convergence.json")).unwrap()).unwrap();
    assert_eq!(conv["converged"], false);
}

fn linear_csv(dir: &Path) -> PathBuf {
    let mut body = String::from("t,a,adot,b,bdot\n");
    for k in 0..=120 {
        let t = -10.0 + 0.1 * k as f64;
        body.push_str(&format!("{t},1,0,{},0.5\n", -1.0 + 0.5 * t));
    }
    write(dir, "line.csv", &body)
}

#[test]
fn cone_matches_the_linear_oracle() {
    let dir = TempDir::new().unwrap();
    let traj = linear_csv(dir.path());
    for (sign, want, deriv) in [("adv", 4.0 / 3.0, 2.0 / 3.0), ("ret", -4.0, 2.0)] {
        let o = fst(&["cone", "--traj", s(&traj), "--t", "0", "--sign", sign, "--vertex", "a"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert!((r["cone_time"].as_f64().unwrap() - want).abs() < 1e-12);
        assert!((r["derivative"].as_f64().unwrap() - deriv).abs() < 1e-12);
        assert!(r["residual"].as_f64().unwrap() < 1e-12);
    }
    let o = fst(&["cone", "--traj", s(&traj), "--t", "-2.5", "--sign", "ret", "--vertex", "b"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn malformed_csv_exits_1() {
    let dir = TempDir::new().unwrap();
    let traj = write(dir.path(), "bad.csv", "t,a,b\n0,1,-1\n");
    let o = fst(&["cone", "--traj", s(&traj), "--t", "0", "--sign", "adv", "--vertex", "a"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("header"));
    let traj = write(dir.path(), "fast.csv", "t,a,adot,b,bdot\n0,1,0,-1,1.5\n0.1,1,0,-1,0\n");
    let o = fst(&["cone", "--traj", s(&traj), "--t", "0", "--sign", "adv", "--vertex", "a"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn symmetric_example_solves_and_checks() {
    let dir = TempDir::new().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/symmetric.json");
    let (o, out) = solve(&dir, &cfg);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = fst(&["check", "--traj", s(&out.join("trajectory.csv")), "--config", s(&cfg)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(out.join("decay.svg").exists());
}

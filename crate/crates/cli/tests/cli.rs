use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rou_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rou-lab"))
        .args(args)
        .env_remove("ROU_LAB_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.ini");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const MC_CONFIG: &str = "\
[model]
H = 0.7
alpha = 1
basis = const
mu = 1

[grid]
points_per_unit = 16

[experiment]
kind = consistency
horizons = 5, 10
replicates = 4
burn_in = 2
estimator = alt_a1star
base_seed = 11
";

#[test]
fn classify_reports_missing_counterpart() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[model]\nbasis = sin:1\n");
    let o = rou_lab(&["classify", "--config", &cfg]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "A1, suggested phi: cos:1");

    let o = rou_lab(&["classify", "--basis", "const,sin:2,cos:2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "A1*");
}

#[test]
fn zero_points_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[model]\nH = 0.7\n[grid]\nn_points = 0\n");
    let out = dir.path().join("out");
    let o = rou_lab(&["simulate-rosenblatt", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(!out.join("rosenblatt.csv").exists());
}

#[test]
fn usage_errors_exit_one() {
    for args in [&["frobnicate"][..], &["classify", "--bogus"], &[]] {
        let o = rou_lab(args);
        assert_eq!(code(&o), 1, "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"), "{args:?}");
    }
    assert_eq!(code(&rou_lab(&["--help"])), 0);
    assert_eq!(code(&rou_lab(&["classify", "--config", "/nonexistent/run.ini"])), 1);
    assert_eq!(code(&rou_lab(&["classify", "--basis", "tan:1"])), 1);
}

#[test]
fn montecarlo_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MC_CONFIG);
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for out in [&a, &b] {
        let o = rou_lab(&["montecarlo", "--config", &cfg, "--out", out.to_str().unwrap(), "--quiet"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["montecarlo.csv", "summary.json", "manifest.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let csv = fs::read_to_string(a.join("montecarlo.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 4);

    let manifest = a.join("manifest.json");
    let o = rou_lab(&["montecarlo", "--manifest", manifest.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(a.join("montecarlo.csv")).unwrap(), fs::read(c.join("montecarlo.csv")).unwrap());

    let m: serde_json::Value = serde_json::from_slice(&fs::read(&manifest).unwrap()).unwrap();
    assert_eq!(m["config"]["replicates"], 4);
    assert_eq!(m["config"]["points_per_unit"], 16);
    assert!(m["outputs"]["montecarlo.csv"].as_str().unwrap().len() == 64);
}

#[test]
fn seed_and_workers_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MC_CONFIG);
    let run = |out: &str, extra: &[&str]| {
        let out = dir.path().join(out);
        let mut args = vec!["montecarlo", "--config", &cfg, "--out", out.to_str().unwrap(), "--quiet"];
        args.extend_from_slice(extra);
        assert_eq!(code(&rou_lab(&args)), 0);
        fs::read(out.join("montecarlo.csv")).unwrap()
    };
    let one = run("w1", &["--workers", "1"]);
    assert_eq!(one, run("w3", &["--workers", "3"]));
    assert_ne!(one, run("s", &["--seed", "12"]));
    assert_eq!(code(&rou_lab(&["classify", "--basis", "const", "--workers", "0"])), 1);
}

#[test]
fn outputs_are_not_clobbered_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[model]\nH = 0.7\n[grid]\npoints_per_unit = 16\nn_points = 33\n");
    let out = dir.path().join("out");
    let args = ["simulate-rosenblatt", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "3"];
    assert_eq!(code(&rou_lab(&args)), 0);
    let first = fs::read(out.join("rosenblatt.csv")).unwrap();
    assert_eq!(code(&rou_lab(&args)), 1);

    let mut forced = args.to_vec();
    forced[6] = "4";
    forced.push("--force");
    assert_eq!(code(&rou_lab(&forced)), 0);
    let second = fs::read_to_string(out.join("rosenblatt.csv")).unwrap();
    assert_ne!(first, second.as_bytes());
    assert!(second.starts_with("t,z\n"));
    assert_eq!(second.lines().count(), 34);
    let names: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 2, "{names:?}");
}

#[test]
fn calibration_file_is_used_and_hashed() {
    let dir = tempfile::tempdir().unwrap();
    let cal_dir = dir.path().join("cal");
    let cfg = write_config(dir.path(), "[model]\nH = 0.7\n[grid]\npoints_per_unit = 16\n");
    assert_eq!(code(&rou_lab(&["calibrate", "--config", &cfg, "--out", cal_dir.to_str().unwrap(), "--quiet"])), 0);
    let consts: serde_json::Value = serde_json::from_slice(&fs::read(cal_dir.join("constants.json")).unwrap()).unwrap();
    assert_eq!(consts["points_per_unit"], 16);

    let cfg = write_config(
        dir.path(),
        "[model]\nH = 0.7\n[grid]\npoints_per_unit = 16\nn_points = 17\ncalibration = cal/constants.json\n",
    );
    let out = dir.path().join("sim");
    assert_eq!(code(&rou_lab(&["simulate-rosenblatt", "--config", &cfg, "--out", out.to_str().unwrap()])), 0);
    let m: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    let bytes = fs::read(cal_dir.join("constants.json")).unwrap();
    use sha2::Digest;
    let hex: String = sha2::Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(m["calibration_sha256"], hex.as_str());
    assert_eq!(m["constants"], consts);

    let cfg = write_config(
        dir.path(),
        "[model]\nH = 0.7\n[grid]\npoints_per_unit = 32\nn_points = 17\ncalibration = cal/constants.json\n",
    );
    let out = dir.path().join("mismatch");
    assert_eq!(code(&rou_lab(&["simulate-rosenblatt", "--config", &cfg, "--out", out.to_str().unwrap()])), 1);
}

#[test]
fn simulate_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[model]\nH = 0.7\nalpha = 1\nbasis = const\nmu = 2\n[grid]\npoints_per_unit = 16\nn_points = 801\n",
    );
    let out = dir.path().join("out");
    assert_eq!(code(&rou_lab(&["simulate-rou", "--config", &cfg, "--out", out.to_str().unwrap(), "--quiet"])), 0);
    let path = out.join("rou.csv");
    assert!(fs::read_to_string(&path).unwrap().starts_with("t,x\n"));

    let est_dir = dir.path().join("est");
    let o = rou_lab(&["estimate", "--config", &cfg, "--input", path.to_str().unwrap(), "--out", est_dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(est_dir.join("estimate.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "replicate,seed,n,estimator,mu_hat_1,alpha_hat,gamma_n_inv,flag");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[2], "50");
    assert_eq!(row[3], "alt_a1star");
    let alpha: f64 = row[5].parse().unwrap();
    assert!(alpha > 0.0 && alpha.is_finite());
}

#[test]
fn estimator_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[model]\nH = 0.7\nbasis = const\n");
    let path = dir.path().join("flat.csv");
    let body: String = std::iter::once("t,x\n".to_string()).chain((0..65).map(|k| format!("{},0\n", k as f64 / 16.0))).collect();
    fs::write(&path, body).unwrap();
    let o = rou_lab(&["estimate", "--config", &cfg, "--input", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));

    fs::write(&path, "t,x\n0,0\n0.1,1\n0.3,2\n").unwrap();
    let o = rou_lab(&["estimate", "--config", &cfg, "--input", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

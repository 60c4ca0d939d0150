//! The `hbctl` binary end to end: exit codes and written artefacts.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hyperbolic_backstepping::config::sha256_hex;

fn hbctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hbctl")).args(args).output().expect("hbctl runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> (String, String) {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    (path.to_str().unwrap().to_string(), sha256_hex(text.as_bytes()))
}

const SMALL: &str = r#"
scenario = "state-feedback"

[system]
lambda = [1.0]
mu = [1.0, 0.2]
sigma_pm = [[1.0, 0.5]]
sigma_mp = [[1.0], [0.75]]
sigma_mm = [[0.0, 0.5], [-0.5, 0.0]]
q0 = [[0.5, 0.5]]
r1 = [[1.0], [0.5]]

[kernel]
n = 30

[simulation]
nx = 60
compatible = true
t_end = 1.1
t_end_unit = "t-f"
"#;

#[test]
fn invalid_system_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _) = write_config(dir.path(), "bad.toml", "[system]\nlambda = [1.0]\nmu = [0.5, 0.5]\n");
    let out = hbctl(&["kernels", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("isotachic"));
}

#[test]
fn unreadable_config_and_bad_flags_are_validation_errors() {
    assert_eq!(hbctl(&["simulate", "--config", "/nonexistent/x.toml"]).status.code(), Some(1));
    assert_eq!(hbctl(&["verify", "--criterion", "no-such-criterion"]).status.code(), Some(1));
    assert_eq!(hbctl(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn picard_budget_exhaustion_is_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("n = 30", "n = 30\nmax_iter = 2\ntol = 1e-14");
    let (cfg, _) = write_config(dir.path(), "tight.toml", &text);
    let out = hbctl(&["kernels", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn kernels_write_hashed_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, hash) = write_config(dir.path(), "small.toml", SMALL);
    let out_dir = dir.path().join("k");
    let out = hbctl(&["kernels", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["controller_kernels.txt", "observer_kernels.txt", "l_traces.csv", "picard_controller.csv", "picard_observer.csv"] {
        let text = fs::read_to_string(out_dir.join(f)).unwrap();
        assert!(text.starts_with(&format!("# config-hash {hash}")), "{f} lacks the config hash");
    }
}

#[test]
fn simulate_with_seed_check_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, hash) = write_config(dir.path(), "small.toml", SMALL);
    let out_dir = dir.path().join("s");
    let out = hbctl(&["simulate", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--seed-check"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains(&hash));
    assert!(stdout.contains("identical"), "{stdout}");

    let series = fs::read_to_string(out_dir.join("timeseries.csv")).unwrap();
    assert!(series.starts_with(&format!("# config-hash {hash}")));
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(series.as_bytes());
    let cols: Vec<String> = rdr.headers().unwrap().iter().map(str::to_string).collect();
    let norm = cols.iter().position(|c| c == "norm_L2").unwrap();
    let rows: Vec<f64> = rdr.records().map(|r| r.unwrap()[norm].parse().unwrap()).collect();
    let peak = rows.iter().cloned().fold(0.0, f64::max);
    // the coarse upwind grid leaves a few percent of the peak at 1.1 t_F
    assert!(rows.last().unwrap() / peak < 0.1, "closed loop did not settle");
    assert!(out_dir.join("final_state.csv").exists());
}

#[test]
fn verify_single_cheap_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _) = write_config(dir.path(), "v.toml", "[system]\nlambda = [1.0]\nmu = [1.0, 0.2]\n[kernel]\nn = 60\n[simulation]\nnx = 100\n");
    let out_dir = dir.path().join("v");
    let out = hbctl(&["verify", "--config", &cfg, "--criterion", "picard-convergence", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = fs::read_to_string(out_dir.join("verify.txt")).unwrap();
    assert!(report.contains("criterion=9 name=picard-convergence"));
    assert!(report.contains("pass=true"));
}

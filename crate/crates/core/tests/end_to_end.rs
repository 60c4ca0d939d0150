//! Shipped configs through the library, plus invariants over random inputs.

use std::path::PathBuf;

use hyperbolic_backstepping::cli::{cmd_simulate, cmd_kernels};
use hyperbolic_backstepping::config::ExperimentConfig;
use hyperbolic_backstepping::kernels::transform::{forward, inverse};
use hyperbolic_backstepping::kernels::{ControllerKernels, PicardOptions};
use hyperbolic_backstepping::sim::Grid1D;
use hyperbolic_backstepping::verify::heterodirectional_test_system;
use proptest::prelude::*;

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

#[test]
fn every_shipped_config_parses() {
    for entry in std::fs::read_dir(config("")).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let valid = cfg.system().unwrap().validate().ok;
        let expect_valid = !path.ends_with("isotachic_invalid.toml");
        assert_eq!(valid, expect_valid, "{}", path.display());
    }
}

#[test]
fn zero_coupling_config_needs_no_feedback() {
    let cfg = ExperimentConfig::load(&config("zero_coupling.toml")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let lines = cmd_kernels(&cfg, dir.path()).unwrap();
    assert!(lines[1].contains("max|K| 0.0000e0"), "{}", lines[1]);
    assert!(lines[1].contains("max|L| 0.0000e0"), "{}", lines[1]);
}

#[test]
fn target_config_runs_to_rest() {
    let mut cfg = ExperimentConfig::load(&config("hetero_target.toml")).unwrap();
    cfg.kernel.n = 60;
    cfg.simulation.nx = 120;
    let dir = tempfile::tempdir().unwrap();
    let lines = cmd_simulate(&cfg, dir.path(), None).unwrap();
    let norm = lines.iter().find(|l| l.starts_with("norm_L2:")).expect("norm line");
    let ratio: f64 = norm.rsplit(' ').next().unwrap().parse().unwrap();
    // residue is grid diffusion at nx = 120
    assert!(ratio < 1e-2, "{norm}");
}

fn kernels() -> &'static ControllerKernels {
    use std::sync::OnceLock;
    static K: OnceLock<ControllerKernels> = OnceLock::new();
    K.get_or_init(|| ControllerKernels::solve(&heterodirectional_test_system(), 80, PicardOptions::default()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transforms_are_linear_and_invert(a in -2.0f64..2.0, b in -2.0f64..2.0, w in 0.5f64..4.0) {
        let k = kernels();
        let grid = Grid1D::new(80).unwrap();
        let u = vec![grid.sample(|x| a * (w * x).sin())];
        let v = vec![grid.sample(|x| b * (w * x).cos()), grid.sample(|x| a * x - b)];
        let (al, be) = forward(k, &u, &v).unwrap();
        let (u2, v2) = inverse(k, &al, &be).unwrap();
        let scale = 1.0 + a.abs() + b.abs();
        for (p, q) in u.iter().chain(&v).zip(u2.iter().chain(&v2)) {
            for (s, t) in p.iter().zip(q) {
                prop_assert!((s - t).abs() < 5e-3 * scale * w * w);
            }
        }

        // doubling the state doubles its image
        let twice = |f: &Vec<Vec<f64>>| f.iter().map(|p| p.iter().map(|s| 2.0 * s).collect()).collect::<Vec<Vec<f64>>>();
        let (al2, be2) = forward(k, &twice(&u), &twice(&v)).unwrap();
        for (p, q) in al.iter().chain(&be).zip(al2.iter().chain(&be2)) {
            for (s, t) in p.iter().zip(q) {
                prop_assert!((2.0 * s - t).abs() < 1e-12 * (1.0 + t.abs()));
            }
        }
    }
}

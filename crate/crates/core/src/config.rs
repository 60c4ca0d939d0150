//! TOML experiment descriptions.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kernels::{closed_form_artificial, ArtificialBoundary, PicardOptions};
use crate::planner::{ReferenceTrajectory, Signal};
use crate::sim::{FieldState, Grid1D, RunConfig, Scheme, StepConfig};
use crate::system::HyperbolicSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    OpenLoop,
    #[default]
    StateFeedback,
    Observer,
    OutputFeedback,
    TargetSystem,
    Tracking,
}

/// Matrices are row-major nested arrays; omitted couplings are zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default)]
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma_pp: Option<Vec<Vec<f64>>>,
    pub sigma_pm: Option<Vec<Vec<f64>>>,
    pub sigma_mp: Option<Vec<Vec<f64>>>,
    pub sigma_mm: Option<Vec<Vec<f64>>>,
    pub q0: Option<Vec<Vec<f64>>>,
    pub r1: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ArtificialSpec {
    /// `L_ij(1, ξ) = −σ⁻⁻_ij/(μᵢ − μⱼ)`.
    #[default]
    Constant,
    /// The `L₂₁(1, ξ)` trace of the explicit 2×2 Bessel kernels.
    #[serde(rename = "closed-form-2x2")]
    ClosedForm2x2,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub artificial: ArtificialSpec,
}

fn default_n() -> usize {
    200
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    200
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self { n: default_n(), tol: default_tol(), max_iter: default_max_iter(), artificial: ArtificialSpec::Constant }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TimeUnit {
    #[default]
    Absolute,
    /// Multiples of `t_F = 1/λ₁ + Σ 1/μⱼ`.
    TF,
    /// Multiples of `t_M = Σ 1/μⱼ`.
    TM,
}

/// How the observer's actuated boundary is driven. The only supported
/// reading is `v̂(t, 1) = R₁û(t, 1) + U(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ObserverBoundaryInput {
    #[default]
    Control,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    #[serde(default = "default_nx")]
    pub nx: usize,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub t_end_unit: TimeUnit,
    #[serde(default)]
    pub scheme: SchemeSpec,
    pub snapshot_every: Option<f64>,
    /// Initial profiles as functions of `x`; missing components default to `sin(πx)`.
    #[serde(default)]
    pub initial_u: Vec<Signal>,
    #[serde(default)]
    pub initial_v: Vec<Signal>,
    /// Observer initial estimate; defaults to zero.
    #[serde(default)]
    pub estimate_u: Vec<Signal>,
    #[serde(default)]
    pub estimate_v: Vec<Signal>,
    #[serde(default)]
    pub observer_boundary_input: ObserverBoundaryInput,
    /// Add `x³` / `(1−x)³` ramps so the initial state meets the closed-loop
    /// boundary conditions.
    #[serde(default)]
    pub compatible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeSpec {
    #[default]
    Upwind,
    Characteristic,
}

fn default_nx() -> usize {
    400
}
fn default_cfl() -> f64 {
    0.9
}
fn default_t_end() -> f64 {
    1.1
}

impl Default for SimulationSpec {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub scenario: Scenario,
    pub out: Option<String>,
    pub system: SystemSpec,
    #[serde(default)]
    pub kernel: KernelSpec,
    #[serde(default)]
    pub simulation: SimulationSpec,
    pub reference: Option<ReferenceTrajectory>,
    /// SHA-256 of the source text, filled in by the loaders.
    #[serde(skip)]
    pub hash: String,
}

fn matrix(name: &str, rows: &Option<Vec<Vec<f64>>>, r: usize, c: usize) -> Result<DMatrix<f64>> {
    let Some(rows) = rows else {
        return Ok(DMatrix::zeros(r, c));
    };
    if r == 0 && rows.is_empty() || c == 0 && rows.iter().all(|row| row.is_empty()) && rows.len() == r {
        return Ok(DMatrix::zeros(r, c));
    }
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        return Err(Error::Config(format!(
            "{name} must be {r}x{c}, got {} rows of lengths {:?}",
            rows.len(),
            rows.iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl SystemSpec {
    pub fn to_system(&self) -> Result<HyperbolicSystem> {
        let (n, m) = (self.lambda.len(), self.mu.len());
        Ok(HyperbolicSystem {
            lambda: self.lambda.clone(),
            mu: self.mu.clone(),
            sigma_pp: matrix("sigma_pp", &self.sigma_pp, n, n)?,
            sigma_pm: matrix("sigma_pm", &self.sigma_pm, n, m)?,
            sigma_mp: matrix("sigma_mp", &self.sigma_mp, m, n)?,
            sigma_mm: matrix("sigma_mm", &self.sigma_mm, m, m)?,
            q0: matrix("q0", &self.q0, n, m)?,
            r1: matrix("r1", &self.r1, m, n)?,
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.hash = sha256_hex(text.as_bytes());
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    fn check(&self) -> Result<()> {
        let (n, m) = (self.system.lambda.len(), self.system.mu.len());
        let sim = &self.simulation;
        if sim.initial_u.len() > n || sim.estimate_u.len() > n || sim.initial_v.len() > m || sim.estimate_v.len() > m {
            return Err(Error::Config(format!("initial profiles exceed (n, m) = ({n}, {m})")));
        }
        if !(sim.cfl > 0.0 && sim.cfl <= 1.0) {
            return Err(Error::Config(format!("cfl must lie in (0, 1], got {}", sim.cfl)));
        }
        if self.scenario == Scenario::Tracking {
            let r = self.reference.as_ref().ok_or_else(|| Error::Config("tracking needs a [reference] block".into()))?;
            if r.m() != m {
                return Err(Error::Config(format!("reference has {} components, system has m = {m}", r.m())));
            }
        }
        if self.kernel.artificial == ArtificialSpec::ClosedForm2x2 && (n != 0 || m != 2) {
            return Err(Error::Config("closed-form-2x2 artificial data needs n = 0, m = 2".into()));
        }
        Ok(())
    }

    pub fn system(&self) -> Result<HyperbolicSystem> {
        self.system.to_system()
    }

    pub fn picard_options(&self) -> PicardOptions {
        PicardOptions { tol: self.kernel.tol, max_iter: self.kernel.max_iter }
    }

    pub fn artificial(&self, sys: &HyperbolicSystem) -> Result<ArtificialBoundary> {
        match self.kernel.artificial {
            ArtificialSpec::Constant => Ok(ArtificialBoundary::constants(&sys.mu, &sys.sigma_mm)),
            ArtificialSpec::ClosedForm2x2 => closed_form_artificial(sys),
        }
    }

    /// End time in absolute units.
    pub fn t_end(&self, sys: &HyperbolicSystem) -> Result<f64> {
        let h = sys.horizons()?;
        let sim = &self.simulation;
        Ok(match sim.t_end_unit {
            TimeUnit::Absolute => sim.t_end,
            TimeUnit::TM => sim.t_end * h.t_m,
            TimeUnit::TF => {
                sim.t_end * h.t_f.ok_or_else(|| Error::Config("t_F is undefined for n = 0; use t-m".into()))?
            }
        })
    }

    pub fn run_config(&self, sys: &HyperbolicSystem) -> Result<RunConfig> {
        let scheme = match self.simulation.scheme {
            SchemeSpec::Upwind => Scheme::Upwind,
            SchemeSpec::Characteristic => Scheme::Characteristic,
        };
        Ok(RunConfig {
            t_end: self.t_end(sys)?,
            step: StepConfig { scheme, cfl: self.simulation.cfl },
            snapshot_every: self.simulation.snapshot_every,
        })
    }

    fn profiles(grid: Grid1D, given: &[Signal], count: usize, fallback: Signal) -> Vec<Vec<f64>> {
        (0..count).map(|k| grid.sample(|x| given.get(k).unwrap_or(&fallback).eval(x))).collect()
    }

    /// True initial state and the observer's initial estimate.
    pub fn initial_states(&self) -> Result<(FieldState, FieldState)> {
        let grid = Grid1D::new(self.simulation.nx)?;
        let (n, m) = (self.system.lambda.len(), self.system.mu.len());
        let s = &self.simulation;
        let bump = Signal::sin(1.0, 0.5, 0.0);
        let zero = Signal::Constant { value: 0.0 };
        let truth = FieldState {
            t: 0.0,
            u: Self::profiles(grid, &s.initial_u, n, bump.clone()),
            v: Self::profiles(grid, &s.initial_v, m, bump),
        };
        let est = FieldState {
            t: 0.0,
            u: Self::profiles(grid, &s.estimate_u, n, zero.clone()),
            v: Self::profiles(grid, &s.estimate_v, m, zero),
        };
        Ok((truth, est))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HETERO: &str = r#"
scenario = "state-feedback"

[system]
lambda = [1.0]
mu = [1.0, 0.2]
sigma_pm = [[2.0, 1.0]]
sigma_mp = [[2.0], [1.5]]
sigma_mm = [[0.0, 0.5], [-0.5, 0.0]]
q0 = [[0.5, 0.5]]
r1 = [[1.0], [0.5]]

[kernel]
n = 100

[simulation]
nx = 200
t_end = 1.1
t_end_unit = "t-f"
"#;

    #[test]
    fn parses_and_builds_system() {
        let cfg = ExperimentConfig::from_toml_str(HETERO).unwrap();
        let sys = cfg.system().unwrap();
        assert!(sys.validate().ok);
        assert_eq!(sys.sigma_pp.shape(), (1, 1));
        assert!((cfg.t_end(&sys).unwrap() - 7.7).abs() < 1e-12);
        assert_eq!(cfg.hash.len(), 64);
        assert_eq!(cfg.kernel.tol, 1e-10);
        let (truth, est) = cfg.initial_states().unwrap();
        assert_eq!(truth.v.len(), 2);
        assert_eq!(est.u[0].iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn homodirectional_with_empty_blocks() {
        let cfg = ExperimentConfig::from_toml_str(
            "scenario = \"tracking\"\n[system]\nmu = [1.0, 0.2]\nsigma_mm = [[0.0, 2.0], [5.0, 0.0]]\n\
             [kernel]\nartificial = \"closed-form-2x2\"\n\
             [reference]\ncomponents = [{ kind = \"sinusoid\", amplitude = 1.0, frequency = 1.0 }, \
             { kind = \"sinusoid\", amplitude = 1.0, frequency = 1.0, phase = 1.5707963267948966 }]\n",
        )
        .unwrap();
        let sys = cfg.system().unwrap();
        assert_eq!(sys.n(), 0);
        let art = cfg.artificial(&sys).unwrap();
        assert!((art.value(1, 0, 1.0) - 6.25).abs() < 1e-12);
        assert!(cfg.t_end(&sys).is_ok());
    }

    #[test]
    fn rejects_bad_configs() {
        let bad_shape = HETERO.replace("q0 = [[0.5, 0.5]]", "q0 = [[0.5]]");
        let cfg = ExperimentConfig::from_toml_str(&bad_shape).unwrap();
        assert!(matches!(cfg.system(), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::from_toml_str("[system]\nmu = [1.0]\nbogus = 1\n"), Err(Error::Config(_))));
        let no_ref = HETERO.replace("\"state-feedback\"", "\"tracking\"");
        assert!(matches!(ExperimentConfig::from_toml_str(&no_ref), Err(Error::Config(_))));
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::from_toml_str(HETERO).unwrap();
        let b = ExperimentConfig::from_toml_str(&format!("{HETERO}\n# comment\n")).unwrap();
        assert_ne!(a.hash, b.hash);
    }
}

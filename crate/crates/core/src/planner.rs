//! Finite-time output tracking `v(t, 0) ≡ Φ(t)` for systems with only
//! leftward states (`n = 0`).

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::picard::ScalarFn;
use crate::kernels::ControllerKernels;
use crate::sim::{integrate, Actuation, FeedbackLaw, FieldState, Grid1D, Plant, RunConfig, TimeSeries};
use crate::system::HyperbolicSystem;

/// Scalar reference primitive.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Signal {
    Constant {
        value: f64,
    },
    /// `amplitude · sin(2π·frequency·t + phase)`.
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `Σ_k c_k t^k`.
    Polynomial {
        coefficients: Vec<f64>,
    },
    Sum {
        terms: Vec<Signal>,
    },
    #[serde(skip)]
    Custom(ScalarFn),
}

impl fmt::Debug for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Signal::Constant { value } => write!(f, "Constant({value})"),
            Signal::Sinusoid { amplitude, frequency, phase } => {
                write!(f, "Sinusoid({amplitude}, {frequency} Hz, {phase} rad)")
            }
            Signal::Polynomial { coefficients } => write!(f, "Polynomial{coefficients:?}"),
            Signal::Sum { terms } => f.debug_list().entries(terms).finish(),
            Signal::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Signal {
    pub fn sin(amplitude: f64, frequency: f64, phase: f64) -> Self {
        Signal::Sinusoid { amplitude, frequency, phase }
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Signal::Custom(std::sync::Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Signal::Constant { value } => *value,
            Signal::Sinusoid { amplitude, frequency, phase } => amplitude * (TAU * frequency * t + phase).sin(),
            Signal::Polynomial { coefficients } => coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c),
            Signal::Sum { terms } => terms.iter().map(|s| s.eval(t)).sum(),
            Signal::Custom(f) => f(t),
        }
    }
}

/// `Φ(t)`, one signal per leftward state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReferenceTrajectory {
    pub components: Vec<Signal>,
    #[serde(default)]
    pub description: String,
}

impl ReferenceTrajectory {
    pub fn new(components: Vec<Signal>) -> Self {
        Self { components, description: String::new() }
    }

    pub fn zero(m: usize) -> Self {
        Self::new(vec![Signal::Constant { value: 0.0 }; m])
    }

    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        self.components.iter().map(|s| s.eval(t)).collect()
    }

    /// Largest `|Φ_i(t)|` over a sampled window.
    pub fn peak(&self, from: f64, to: f64) -> f64 {
        let k = 4000;
        (0..=k)
            .map(|q| from + (to - from) * q as f64 / k as f64)
            .flat_map(|t| self.eval(t))
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// The pre-compensated boundary reference
/// `B_i(t) = Φ_i(t + 1/μ_i) − Σ_{j<i} ∫₀¹ (μ_j/μ_i) L_ij(ξ, 0) Φ_j(t + (1−ξ)/μ_i) dξ`.
#[derive(Debug, Clone)]
pub struct BoundaryPlan {
    mu: Vec<f64>,
    reference: ReferenceTrajectory,
    /// Per row: `(j, [(ξ, weight · (μ_j/μ_i) L_ij(ξ, 0))])`.
    terms: Vec<Vec<(usize, Vec<(f64, f64)>)>>,
}

fn require_homodirectional(sys: &HyperbolicSystem) -> Result<()> {
    if sys.n() != 0 {
        return Err(Error::Unsupported(format!(
            "motion planning needs n = 0 (only leftward states); this system has n = {}",
            sys.n()
        )));
    }
    Ok(())
}

pub fn plan_boundary_inputs(kernels: &ControllerKernels, sys: &HyperbolicSystem, phi: &ReferenceTrajectory) -> Result<BoundaryPlan> {
    require_homodirectional(sys)?;
    sys.ensure_valid()?;
    let m = sys.m();
    if phi.m() != m || kernels.m() != m || kernels.n() != 0 {
        return Err(Error::Dimension(format!(
            "reference has {} components, kernels are {}x{}, system has m = {m}",
            phi.m(),
            kernels.m(),
            kernels.n()
        )));
    }
    let n = kernels.grid.n();
    let h = 1.0 / n as f64;
    let terms = (0..m)
        .map(|i| {
            (0..i)
                .filter_map(|j| {
                    let trace = kernels.l.get(i, j).trace_xi0();
                    if trace.iter().all(|v| *v == 0.0) {
                        return None;
                    }
                    let scale = sys.mu[j] / sys.mu[i];
                    let pts = trace
                        .iter()
                        .enumerate()
                        .map(|(a, l)| {
                            let w = if a == 0 || a == n { 0.5 * h } else { h };
                            (a as f64 * h, w * scale * l)
                        })
                        .collect();
                    Some((j, pts))
                })
                .collect()
        })
        .collect();
    Ok(BoundaryPlan { mu: sys.mu.clone(), reference: phi.clone(), terms })
}

impl BoundaryPlan {
    pub fn eval(&self, t: f64) -> Vec<f64> {
        (0..self.mu.len())
            .map(|i| {
                let mu = self.mu[i];
                let mut b = self.reference.components[i].eval(t + 1.0 / mu);
                for (j, pts) in &self.terms[i] {
                    let phi = &self.reference.components[*j];
                    b -= pts.iter().map(|(xi, c)| c * phi.eval(t + (1.0 - xi) / mu)).sum::<f64>();
                }
                b
            })
            .collect()
    }

    /// How far ahead of `t` the plan reads the reference.
    pub fn lookahead(&self) -> f64 {
        self.mu.iter().fold(0.0, |a, &m| a.max(1.0 / m))
    }

    pub fn reference(&self) -> &ReferenceTrajectory {
        &self.reference
    }
}

/// Tracking law `U(t) = B(t) + ∫₀¹ L(1, ξ) v(t, ξ) dξ` on a simulation grid.
#[derive(Debug, Clone)]
pub struct TrackingLaw {
    pub plan: BoundaryPlan,
    pub feedback: FeedbackLaw,
}

impl TrackingLaw {
    pub fn new(kernels: &ControllerKernels, sys: &HyperbolicSystem, phi: &ReferenceTrajectory, grid: Grid1D) -> Result<Self> {
        let plan = plan_boundary_inputs(kernels, sys, phi)?;
        let feedback = FeedbackLaw::new(kernels, sys, grid)?;
        Ok(Self { plan, feedback })
    }

    pub fn control(&self, state: &FieldState) -> Vec<f64> {
        let fb = self.feedback.control(&state.u, &state.v);
        self.plan.eval(state.t).iter().zip(fb).map(|(b, f)| b + f).collect()
    }
}

/// One-shot evaluation of the tracking law at `state.t`.
pub fn tracking_control(
    kernels: &ControllerKernels,
    sys: &HyperbolicSystem,
    phi: &ReferenceTrajectory,
    state: &FieldState,
) -> Result<Vec<f64>> {
    Ok(TrackingLaw::new(kernels, sys, phi, Grid1D::new(state.nx())?)?.control(state))
}

/// Closed loop under the tracking law; adds `track_err` and `track_err<i>` columns.
pub fn run_tracking(
    sys: &HyperbolicSystem,
    kernels: &ControllerKernels,
    phi: &ReferenceTrajectory,
    initial: FieldState,
    cfg: RunConfig,
) -> Result<TimeSeries> {
    let law = TrackingLaw::new(kernels, sys, phi, Grid1D::new(initial.nx())?)?;
    let offset = |t: f64| law.plan.eval(t);
    let plant = Plant::new(sys, Actuation::Tracking { law: &law.feedback, offset: &offset })?;
    let mut cols = plant.columns();
    cols.push("track_err".into());
    cols.extend((1..=sys.m()).map(|i| format!("track_err{i}")));
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    integrate(&plant, initial, cfg, &cols, |s| {
        let mut d = plant.diagnostics(s);
        let err: Vec<f64> = s.v.iter().zip(phi.eval(s.t)).map(|(p, r)| (p[0] - r).abs()).collect();
        d.push(err.iter().map(|e| e * e).sum::<f64>().sqrt());
        d.extend(err);
        d
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::PicardOptions;
    use crate::sim::Scheme;
    use nalgebra::{dmatrix, DMatrix};

    #[test]
    fn signals_evaluate() {
        assert_eq!(Signal::Polynomial { coefficients: vec![1.0, 2.0, 3.0] }.eval(2.0), 17.0);
        let s = Signal::Sum { terms: vec![Signal::Constant { value: 1.0 }, Signal::sin(2.0, 0.25, 0.0)] };
        assert!((s.eval(1.0) - 3.0).abs() < 1e-14);
        assert_eq!(Signal::custom(|t| t * t).eval(3.0), 9.0);
    }

    #[test]
    fn signal_toml_round_trip() {
        let r: ReferenceTrajectory = toml::from_str(
            r#"
            components = [
              { kind = "sinusoid", amplitude = 1.0, frequency = 1.0 },
              { kind = "sum", terms = [{ kind = "constant", value = 0.5 }, { kind = "polynomial", coefficients = [0.0, 1.0] }] },
            ]
            "#,
        )
        .unwrap();
        assert!((r.eval(0.25)[0] - 1.0).abs() < 1e-14);
        assert!((r.eval(2.0)[1] - 2.5).abs() < 1e-14);
    }

    #[test]
    fn single_state_plan_is_a_pure_preview() {
        let sys = HyperbolicSystem::homodirectional(vec![0.5], DMatrix::zeros(1, 1));
        let k = ControllerKernels::solve(&sys, 16, PicardOptions::default()).unwrap();
        let phi = ReferenceTrajectory::new(vec![Signal::sin(1.0, 1.0, 0.3)]);
        let plan = plan_boundary_inputs(&k, &sys, &phi).unwrap();
        for t in [0.0, 0.7, 3.1] {
            assert_eq!(plan.eval(t)[0], phi.eval(t + 2.0)[0]);
        }
        assert_eq!(plan.lookahead(), 2.0);
    }

    #[test]
    fn heterodirectional_rejected() {
        let sys = HyperbolicSystem::uncoupled(vec![1.0], vec![1.0]);
        let k = ControllerKernels::solve(&sys, 16, PicardOptions::default()).unwrap();
        let phi = ReferenceTrajectory::zero(1);
        assert!(matches!(plan_boundary_inputs(&k, &sys, &phi), Err(Error::Unsupported(_))));
    }

    #[test]
    fn delay_line_tracks_after_transport_time() {
        let sys = HyperbolicSystem::homodirectional(vec![1.0, 0.5], DMatrix::zeros(2, 2));
        let k = ControllerKernels::solve(&sys, 16, PicardOptions::default()).unwrap();
        let phi = ReferenceTrajectory::new(vec![Signal::sin(1.0, 0.5, 0.0), Signal::Constant { value: 0.7 }]);
        let g = Grid1D::new(200).unwrap();
        let cfg = RunConfig::new(3.0).with_scheme(Scheme::Characteristic);
        let ts = run_tracking(&sys, &k, &phi, FieldState::zeros(0, 2, g), cfg).unwrap();
        assert!(ts.max_over("track_err1", 1.1, 3.0) < 1e-3);
        // the switch-on jump of component 2 reaches x = 0 at t = 2 and leaves a short dispersive trail
        assert!(ts.max_over("track_err2", 2.5, 3.0) < 1e-3);
    }

    #[test]
    fn coupled_plan_tracks() {
        let sys = HyperbolicSystem::homodirectional(vec![1.0, 0.5], dmatrix![0.0, 1.0; 2.0, 0.0]);
        let k = ControllerKernels::solve(&sys, 64, PicardOptions::default()).unwrap();
        let phi = ReferenceTrajectory::new(vec![Signal::sin(1.0, 0.5, 0.0), Signal::sin(1.0, 0.5, 1.0)]);
        let g = Grid1D::new(200).unwrap();
        let cfg = RunConfig::new(5.0).with_scheme(Scheme::Characteristic);
        let ts = run_tracking(&sys, &k, &phi, FieldState::zeros(0, 2, g), cfg).unwrap();
        let rms = ts.rms_over("track_err", 3.3, 5.0);
        assert!(rms < 0.02, "rms tracking error {rms}");
    }
}

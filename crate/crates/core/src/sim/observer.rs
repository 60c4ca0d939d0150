use nalgebra::DMatrix;

use super::plant::plant_source;
use super::{integrate, l2_norm, linf_norm, Dynamics, FeedbackLaw, FieldState, Grid1D, RunConfig, TimeSeries};
use crate::error::{Error, Result};
use crate::kernels::{ControllerKernels, ObserverKernels};
use crate::system::HyperbolicSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObserverMode {
    /// The plant runs under full-state feedback; the observer only estimates.
    StateFeedbackPlant,
    /// The control law is evaluated on the estimates.
    OutputFeedback,
}

/// Plant and boundary observer integrated as one stacked system
/// `u = [u; û]`, `v = [v; v̂]`, with measurement `y(t) = v(t, 0)`.
pub struct ObserverLoop<'a> {
    sys: &'a HyperbolicSystem,
    law: FeedbackLaw,
    mode: ObserverMode,
    p_plus: Vec<DMatrix<f64>>,
    p_minus: Vec<DMatrix<f64>>,
    lambda: Vec<f64>,
    mu: Vec<f64>,
}

impl<'a> ObserverLoop<'a> {
    pub fn new(
        sys: &'a HyperbolicSystem,
        obs: &ObserverKernels,
        ctrl: &ControllerKernels,
        grid: Grid1D,
        mode: ObserverMode,
    ) -> Result<Self> {
        sys.ensure_valid()?;
        if obs.p_plus.rows != sys.n() || obs.p_minus.rows != sys.m() {
            return Err(Error::Dimension("observer kernels do not match the system".into()));
        }
        let law = FeedbackLaw::new(ctrl, sys, grid)?;
        let xs = grid.positions();
        Ok(Self {
            sys,
            law,
            mode,
            p_plus: xs.iter().map(|&x| obs.p_plus.matrix_at(x)).collect(),
            p_minus: xs.iter().map(|&x| obs.p_minus.matrix_at(x)).collect(),
            lambda: [sys.lambda.clone(), sys.lambda.clone()].concat(),
            mu: [sys.mu.clone(), sys.mu.clone()].concat(),
        })
    }

    /// Stacks the true and estimated states.
    pub fn stack(truth: &FieldState, estimate: &FieldState) -> FieldState {
        FieldState {
            t: truth.t,
            u: truth.u.iter().chain(&estimate.u).cloned().collect(),
            v: truth.v.iter().chain(&estimate.v).cloned().collect(),
        }
    }

    /// Splits a stacked state into `(truth, estimate)`.
    pub fn split(&self, s: &FieldState) -> (FieldState, FieldState) {
        let (n, m) = (self.sys.n(), self.sys.m());
        (
            FieldState { t: s.t, u: s.u[..n].to_vec(), v: s.v[..m].to_vec() },
            FieldState { t: s.t, u: s.u[n..].to_vec(), v: s.v[m..].to_vec() },
        )
    }

    pub fn columns() -> Vec<&'static str> {
        vec!["norm_L2", "norm_L2_hat", "norm_L2_total", "err_L2", "norm_Linf", "y1_err"]
    }

    pub fn diagnostics(&self, s: &FieldState) -> Vec<f64> {
        let (n, m) = (self.sys.n(), self.sys.m());
        let sq = |p: &[Vec<f64>]| l2_norm(p).powi(2);
        let plant = sq(&s.u[..n]) + sq(&s.v[..m]);
        let hat = sq(&s.u[n..]) + sq(&s.v[m..]);
        let diff = |a: &[Vec<f64>], b: &[Vec<f64>]| -> Vec<Vec<f64>> {
            a.iter().zip(b).map(|(p, q)| p.iter().zip(q).map(|(x, y)| x - y).collect()).collect()
        };
        let eu = diff(&s.u[..n], &s.u[n..]);
        let ev = diff(&s.v[..m], &s.v[m..]);
        let err = sq(&eu) + sq(&ev);
        vec![
            plant.sqrt(),
            hat.sqrt(),
            (plant + hat).sqrt(),
            err.sqrt(),
            linf_norm(&s.u).max(linf_norm(&s.v)),
            s.v[m][0] - s.v[0][0],
        ]
    }
}

impl Dynamics for ObserverLoop<'_> {
    fn right_speeds(&self) -> &[f64] {
        &self.lambda
    }

    fn left_speeds(&self) -> &[f64] {
        &self.mu
    }

    fn source(&self, s: &FieldState, out: &mut FieldState) {
        let (n, m) = (self.sys.n(), self.sys.m());
        plant_source(self.sys, s, out, 0, 0);
        plant_source(self.sys, s, out, n, m);
        let innov: Vec<f64> = (0..m).map(|j| s.v[m + j][0] - s.v[j][0]).collect();
        if innov.iter().all(|e| *e == 0.0) {
            return;
        }
        for (k, (pp, pm)) in self.p_plus.iter().zip(&self.p_minus).enumerate() {
            for i in 0..n {
                out.u[n + i][k] -= (0..m).map(|j| pp[(i, j)] * innov[j]).sum::<f64>();
            }
            for i in 0..m {
                out.v[m + i][k] -= (0..m).map(|j| pm[(i, j)] * innov[j]).sum::<f64>();
            }
        }
    }

    fn close(&self, s: &mut FieldState) -> Result<()> {
        let (n, m, nx) = (self.sys.n(), self.sys.m(), s.nx());
        let (q0, r1) = (&self.sys.q0, &self.sys.r1);
        for i in 0..n {
            let y: f64 = (0..m).map(|j| q0[(i, j)] * s.v[j][0]).sum();
            s.u[i][0] = y;
            s.u[n + i][0] = y;
        }
        let reflect = |s: &FieldState, off: usize, j: usize| -> f64 { (0..n).map(|i| r1[(j, i)] * s.u[off + i][nx]).sum() };
        let control: Vec<f64> = match self.mode {
            ObserverMode::StateFeedbackPlant => {
                let vb = self.law.boundary_values(&s.u[..n], &s.v[..m], None)?;
                (0..m).map(|j| vb[j] - reflect(s, 0, j)).collect()
            }
            ObserverMode::OutputFeedback => {
                let vb = self.law.boundary_values(&s.u[n..], &s.v[m..], None)?;
                (0..m).map(|j| vb[j] - reflect(s, n, j)).collect()
            }
        };
        let plant: Vec<f64> = (0..m).map(|j| reflect(s, 0, j) + control[j]).collect();
        let est: Vec<f64> = (0..m).map(|j| reflect(s, n, j) + control[j]).collect();
        for j in 0..m {
            s.v[j][nx] = plant[j];
            s.v[m + j][nx] = est[j];
        }
        Ok(())
    }
}

/// Co-integrates plant and observer from `(truth, estimate)` initial data.
pub fn run_observer(
    sys: &HyperbolicSystem,
    obs: &ObserverKernels,
    ctrl: &ControllerKernels,
    truth: &FieldState,
    estimate: &FieldState,
    mode: ObserverMode,
    cfg: RunConfig,
) -> Result<TimeSeries> {
    if truth.nx() != estimate.nx() {
        return Err(Error::Dimension("true and estimated states use different grids".into()));
    }
    let lp = ObserverLoop::new(sys, obs, ctrl, Grid1D::new(truth.nx())?, mode)?;
    integrate(&lp, ObserverLoop::stack(truth, estimate), cfg, &ObserverLoop::columns(), |s| lp.diagnostics(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TriangularGrid;
    use crate::kernels::{solve_observer_kernels, PicardOptions};
    use nalgebra::dmatrix;

    fn coupled() -> HyperbolicSystem {
        let mut s = HyperbolicSystem::uncoupled(vec![1.0], vec![1.5]);
        s.sigma_pm = dmatrix![1.0];
        s.sigma_mp = dmatrix![2.0];
        s.q0 = dmatrix![0.5];
        s.r1 = dmatrix![0.5];
        s
    }

    #[test]
    fn matching_estimate_stays_exact() {
        let sys = coupled();
        let obs = solve_observer_kernels(&sys, TriangularGrid::new(24).unwrap(), PicardOptions::default()).unwrap();
        let ctrl = ControllerKernels::solve(&sys, 24, PicardOptions::default()).unwrap();
        let g = Grid1D::new(64).unwrap();
        let init = FieldState::from_fns(g, &[&|x| x.sin()], &[&|x| x * (1.0 - x)]);
        let ts = run_observer(&sys, &obs, &ctrl, &init, &init, ObserverMode::StateFeedbackPlant, RunConfig::new(1.0)).unwrap();
        assert!(ts.max_over("err_L2", 0.0, 1.0) < 1e-13);
    }

    #[test]
    fn estimation_error_vanishes() {
        let sys = coupled();
        let obs = solve_observer_kernels(&sys, TriangularGrid::new(48).unwrap(), PicardOptions::default()).unwrap();
        let ctrl = ControllerKernels::solve(&sys, 48, PicardOptions::default()).unwrap();
        let g = Grid1D::new(200).unwrap();
        let truth = FieldState::from_fns(g, &[&|x| (2.0 * x).sin()], &[&|x| x * x]);
        let est = FieldState::zeros(1, 1, g);
        let t_f = 1.0 + 1.0 / 1.5;
        let ts = run_observer(&sys, &obs, &ctrl, &truth, &est, ObserverMode::StateFeedbackPlant, RunConfig::new(1.1 * t_f))
            .unwrap();
        let e0 = ts.value_at("err_L2", 0.0);
        assert!(ts.last("err_L2") < 0.05 * e0, "error {} of {}", ts.last("err_L2"), e0);
    }
}

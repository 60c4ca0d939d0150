use nalgebra::DMatrix;

use super::{integrate, l2_norm, linf_norm, Dynamics, FeedbackLaw, FieldState, Grid1D, RunConfig, TimeSeries};
use crate::error::{Error, Result};
use crate::kernels::ControllerKernels;
use crate::system::HyperbolicSystem;

/// Time-dependent vector signal.
pub type VectorSignal<'a> = &'a (dyn Fn(f64) -> Vec<f64> + Sync);

/// What drives the actuated boundary `v(t, 1) = R₁u(t, 1) + U(t)`.
#[derive(Clone, Copy)]
pub enum Actuation<'a> {
    Open,
    Input(VectorSignal<'a>),
    Feedback(&'a FeedbackLaw),
    /// Feedback plus a feedforward offset `B(t)` so that `β(t, 1) = B(t)`.
    Tracking { law: &'a FeedbackLaw, offset: VectorSignal<'a> },
}

pub struct Plant<'a> {
    sys: &'a HyperbolicSystem,
    actuation: Actuation<'a>,
    lambda: Vec<f64>,
    mu: Vec<f64>,
}

impl<'a> Plant<'a> {
    pub fn new(sys: &'a HyperbolicSystem, actuation: Actuation<'a>) -> Result<Self> {
        sys.ensure_valid()?;
        Ok(Self { sys, actuation, lambda: sys.lambda.clone(), mu: sys.mu.clone() })
    }

    /// Diagnostic columns written by [`Plant::diagnostics`].
    pub fn columns(&self) -> Vec<String> {
        let mut c: Vec<String> = ["norm_L2", "norm_L2_u", "norm_L2_v", "norm_Linf"].iter().map(|s| s.to_string()).collect();
        c.extend((1..=self.sys.m()).map(|j| format!("v{j}_x0")));
        c.extend((1..=self.sys.m()).map(|j| format!("ctrl{j}")));
        c
    }

    pub fn diagnostics(&self, s: &FieldState) -> Vec<f64> {
        let (lu, lv) = (l2_norm(&s.u), l2_norm(&s.v));
        let mut d = vec![(lu * lu + lv * lv).sqrt(), lu, lv, linf_norm(&s.u).max(linf_norm(&s.v))];
        d.extend(s.v.iter().map(|p| p[0]));
        d.extend(applied_control(&self.sys.r1, s));
        d
    }
}

/// `U = v(1) − R₁u(1)` as realised by a state.
pub(crate) fn applied_control(r1: &DMatrix<f64>, s: &FieldState) -> Vec<f64> {
    let nx = s.nx();
    (0..s.v.len())
        .map(|j| s.v[j][nx] - (0..s.u.len()).map(|i| r1[(j, i)] * s.u[i][nx]).sum::<f64>())
        .collect()
}

/// Adds `Σ⁺⁺u + Σ⁺⁻v` and `Σ⁻⁺u + Σ⁻⁻v` for the block starting at `(ou, ov)`.
pub(crate) fn plant_source(sys: &HyperbolicSystem, s: &FieldState, out: &mut FieldState, ou: usize, ov: usize) {
    let (n, m) = (sys.n(), sys.m());
    let len = s.nx() + 1;
    for i in 0..n {
        let o = &mut out.u[ou + i];
        for j in 0..n {
            let c = sys.sigma_pp[(i, j)];
            if c != 0.0 {
                o.iter_mut().zip(&s.u[ou + j]).for_each(|(a, b)| *a += c * b);
            }
        }
        for j in 0..m {
            let c = sys.sigma_pm[(i, j)];
            if c != 0.0 {
                o.iter_mut().zip(&s.v[ov + j]).for_each(|(a, b)| *a += c * b);
            }
        }
        debug_assert_eq!(o.len(), len);
    }
    for i in 0..m {
        let o = &mut out.v[ov + i];
        for j in 0..n {
            let c = sys.sigma_mp[(i, j)];
            if c != 0.0 {
                o.iter_mut().zip(&s.u[ou + j]).for_each(|(a, b)| *a += c * b);
            }
        }
        for j in 0..m {
            let c = sys.sigma_mm[(i, j)];
            if c != 0.0 {
                o.iter_mut().zip(&s.v[ov + j]).for_each(|(a, b)| *a += c * b);
            }
        }
    }
}

impl Dynamics for Plant<'_> {
    fn right_speeds(&self) -> &[f64] {
        &self.lambda
    }

    fn left_speeds(&self) -> &[f64] {
        &self.mu
    }

    fn source(&self, state: &FieldState, out: &mut FieldState) {
        plant_source(self.sys, state, out, 0, 0);
    }

    fn close(&self, s: &mut FieldState) -> Result<()> {
        let (n, m, nx) = (self.sys.n(), self.sys.m(), s.nx());
        for i in 0..n {
            s.u[i][0] = (0..m).map(|j| self.sys.q0[(i, j)] * s.v[j][0]).sum();
        }
        let vb = match self.actuation {
            Actuation::Open => vec![0.0; m],
            Actuation::Input(f) => {
                let u = f(s.t);
                if u.len() != m {
                    return Err(Error::Dimension(format!("input has {} components, expected {m}", u.len())));
                }
                u
            }
            Actuation::Feedback(law) => law.boundary_values(&s.u, &s.v, None)?,
            Actuation::Tracking { law, offset } => {
                let b = offset(s.t);
                if b.len() != m {
                    return Err(Error::Dimension(format!("offset has {} components, expected {m}", b.len())));
                }
                law.boundary_values(&s.u, &s.v, Some(&b))?
            }
        };
        let reflect = matches!(self.actuation, Actuation::Open | Actuation::Input(_));
        for j in 0..m {
            let r: f64 = if reflect { (0..n).map(|i| self.sys.r1[(j, i)] * s.u[i][nx]).sum() } else { 0.0 };
            s.v[j][nx] = r + vb[j];
        }
        Ok(())
    }
}

/// Open-loop run, `U ≡ 0`.
pub fn run_open_loop(sys: &HyperbolicSystem, initial: FieldState, cfg: RunConfig) -> Result<TimeSeries> {
    let plant = Plant::new(sys, Actuation::Open)?;
    let cols = plant.columns();
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    integrate(&plant, initial, cfg, &cols, |s| plant.diagnostics(s))
}

/// Closed loop under full-state feedback built from `kernels`.
pub fn run_closed_loop(
    sys: &HyperbolicSystem,
    kernels: &ControllerKernels,
    initial: FieldState,
    cfg: RunConfig,
) -> Result<TimeSeries> {
    let law = FeedbackLaw::new(kernels, sys, Grid1D::new(initial.nx())?)?;
    let plant = Plant::new(sys, Actuation::Feedback(&law))?;
    let cols = plant.columns();
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    integrate(&plant, initial, cfg, &cols, |s| plant.diagnostics(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::PicardOptions;
    use nalgebra::dmatrix;

    fn coupled() -> HyperbolicSystem {
        let mut s = HyperbolicSystem::uncoupled(vec![1.0], vec![1.0]);
        s.sigma_pm = dmatrix![3.0];
        s.sigma_mp = dmatrix![3.0];
        s.q0 = dmatrix![1.0];
        s.r1 = dmatrix![0.5];
        s
    }

    #[test]
    fn open_loop_reflection_bookkeeping() {
        let sys = HyperbolicSystem::uncoupled(vec![1.0], vec![1.0]);
        let g = Grid1D::new(50).unwrap();
        let init = FieldState::from_fns(g, &[&|x| x * (1.0 - x)], &[&|_| 0.0]);
        let ts = run_open_loop(&sys, init, RunConfig::new(2.5)).unwrap();
        // zero reflection: everything exits after 1/λ + 1/μ
        assert!(ts.last("norm_L2") < 1e-12);
    }

    #[test]
    fn feedback_stabilises_in_finite_time() {
        let sys = coupled();
        let kern = ControllerKernels::solve(&sys, 32, PicardOptions::default()).unwrap();
        let g = Grid1D::new(100).unwrap();
        let init = FieldState::from_fns(g, &[&|x| (3.0 * x).sin()], &[&|x| x * x]);
        let open = run_open_loop(&sys, init.clone(), RunConfig::new(2.2)).unwrap();
        let closed = run_closed_loop(&sys, &kern, init, RunConfig::new(2.2)).unwrap();
        assert!(open.last("norm_L2") > 0.1, "open loop {}", open.last("norm_L2"));
        assert!(closed.last("norm_L2") < 0.05 * closed.value_at("norm_L2", 0.0), "closed loop {}", closed.last("norm_L2"));
    }

    #[test]
    fn input_dimension_is_checked() {
        let sys = coupled();
        let f = |_: f64| vec![0.0, 1.0];
        let plant = Plant::new(&sys, Actuation::Input(&f)).unwrap();
        let mut s = FieldState::zeros(1, 1, Grid1D::new(16).unwrap());
        assert!(matches!(plant.close(&mut s), Err(Error::Dimension(_))));
    }
}

use nalgebra::DMatrix;

use super::plant::VectorSignal;
use super::{integrate, l2_norm, linf_norm, Dynamics, FieldState, RunConfig, TimeSeries};
use crate::error::{Error, Result};
use crate::kernels::transform::node_weights;
use crate::kernels::volterra::hcat;
use crate::kernels::{ControllerKernels, TraceMatrix};
use crate::system::HyperbolicSystem;

/// The target cascade reached by the backstepping transformation:
///
/// `α_t + Λ⁺α_x = Σ⁺⁺α + Σ⁺⁻β + Σ⁺⁻∫₀ˣ(C⁺α + C⁻β)`, `β_t − Λ⁻β_x = G(x)β(t, 0)`,
/// `α(t, 0) = Q₀β(t, 0)`, `β(t, 1) = B(t)` (zero unless a boundary signal is given).
pub struct TargetSystem<'a> {
    sys: &'a HyperbolicSystem,
    g: Vec<DMatrix<f64>>,
    /// Per node `l`, per node `k ≤ l`: `Σ⁺⁻ W_k` of the `[C⁺ C⁻]` integral.
    nonlocal: Vec<Vec<DMatrix<f64>>>,
    boundary: Option<VectorSignal<'a>>,
}

impl<'a> TargetSystem<'a> {
    pub fn new(sys: &'a HyperbolicSystem, kernels: &ControllerKernels, nx: usize, boundary: Option<VectorSignal<'a>>) -> Result<Self> {
        sys.ensure_valid()?;
        if kernels.n() != sys.n() || kernels.m() != sys.m() {
            return Err(Error::Dimension("kernels do not match the system".into()));
        }
        let c = hcat(&kernels.c_plus, &kernels.c_minus);
        let nonlocal = (0..=nx)
            .map(|l| node_weights(&c, l, nx).w.iter().map(|w| &sys.sigma_pm * w).collect())
            .collect();
        let g = (0..=nx).map(|k| kernels.g.matrix_at(k as f64 / nx as f64)).collect();
        Ok(Self { sys, g, nonlocal, boundary })
    }

    pub fn columns(&self) -> Vec<String> {
        let mut c: Vec<String> = ["norm_L2", "norm_L2_alpha", "norm_L2_beta", "norm_Linf"].iter().map(|s| s.to_string()).collect();
        c.extend((1..=self.sys.m()).map(|j| format!("beta{j}_x0")));
        c
    }

    pub fn diagnostics(&self, s: &FieldState) -> Vec<f64> {
        let (a, b) = (l2_norm(&s.u), l2_norm(&s.v));
        let mut d = vec![(a * a + b * b).sqrt(), a, b, linf_norm(&s.u).max(linf_norm(&s.v))];
        d.extend(s.v.iter().map(|p| p[0]));
        d
    }
}

impl Dynamics for TargetSystem<'_> {
    fn right_speeds(&self) -> &[f64] {
        &self.sys.lambda
    }

    fn left_speeds(&self) -> &[f64] {
        &self.sys.mu
    }

    fn source(&self, s: &FieldState, out: &mut FieldState) {
        let (n, m) = (self.sys.n(), self.sys.m());
        for i in 0..n {
            for (l, row) in self.nonlocal.iter().enumerate() {
                let mut acc = 0.0;
                for (k, w) in row.iter().enumerate() {
                    for j in 0..n {
                        acc += w[(i, j)] * s.u[j][k];
                    }
                    for j in 0..m {
                        acc += w[(i, n + j)] * s.v[j][k];
                    }
                }
                for j in 0..n {
                    acc += self.sys.sigma_pp[(i, j)] * s.u[j][l];
                }
                for j in 0..m {
                    acc += self.sys.sigma_pm[(i, j)] * s.v[j][l];
                }
                out.u[i][l] += acc;
            }
        }
        let b0: Vec<f64> = s.v.iter().map(|p| p[0]).collect();
        for (k, g) in self.g.iter().enumerate() {
            for i in 0..m {
                out.v[i][k] += (0..i).map(|j| g[(i, j)] * b0[j]).sum::<f64>();
            }
        }
    }

    fn close(&self, s: &mut FieldState) -> Result<()> {
        let (n, m, nx) = (self.sys.n(), self.sys.m(), s.nx());
        for i in 0..n {
            s.u[i][0] = (0..m).map(|j| self.sys.q0[(i, j)] * s.v[j][0]).sum();
        }
        let b = self.boundary.map_or(vec![0.0; m], |f| f(s.t));
        for j in 0..m {
            s.v[j][nx] = b[j];
        }
        Ok(())
    }
}

pub fn run_target_system(
    sys: &HyperbolicSystem,
    kernels: &ControllerKernels,
    initial: FieldState,
    boundary: Option<VectorSignal<'_>>,
    cfg: RunConfig,
) -> Result<TimeSeries> {
    let target = TargetSystem::new(sys, kernels, initial.nx(), boundary)?;
    let cols = target.columns();
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    integrate(&target, initial, cfg, &cols, |s| target.diagnostics(s))
}

/// Exact solution of the `β` cascade by characteristics:
///
/// `β_i(t, x) = B_i(t − (1−x)/μ_i) + ∫ Σ_{j<i} g_ij(x + μ_i(t−τ)) β_j(τ, 0) dτ`,
/// with the integral over the part of the characteristic inside `t ≥ 0`.
pub struct BetaPropagator<'a> {
    mu: Vec<f64>,
    g: &'a TraceMatrix,
    boundary: &'a dyn Fn(usize, f64) -> f64,
    initial: Option<&'a dyn Fn(usize, f64) -> f64>,
    quad: usize,
}

impl<'a> BetaPropagator<'a> {
    pub fn new(mu: &[f64], g: &'a TraceMatrix, boundary: &'a dyn Fn(usize, f64) -> f64) -> Self {
        Self { mu: mu.to_vec(), g, boundary, initial: None, quad: g.n.max(64) }
    }

    /// Supplies `β(0, x)`, which makes every time `t ≥ 0` admissible.
    pub fn with_initial(mut self, initial: &'a dyn Fn(usize, f64) -> f64) -> Self {
        self.initial = Some(initial);
        self
    }

    pub fn with_quadrature(mut self, intervals: usize) -> Self {
        self.quad = intervals.max(2);
        self
    }

    fn couples(&self, i: usize, j: usize) -> bool {
        self.g.entry(i, j).iter().any(|v| *v != 0.0)
    }

    /// Earliest `t` at which `β_i(t, x)` depends on boundary data only.
    pub fn required_wait(&self, i: usize, x: f64) -> f64 {
        let chain = (0..i).filter(|&j| self.couples(i, j)).map(|j| self.required_wait(j, 0.0)).fold(0.0, f64::max);
        (1.0 - x) / self.mu[i] + chain
    }

    pub fn value(&self, i: usize, t: f64, x: f64) -> Result<f64> {
        if i >= self.mu.len() {
            return Err(Error::Dimension(format!("component {i} out of range for m = {}", self.mu.len())));
        }
        if !(0.0..=1.0).contains(&x) || t < 0.0 {
            return Err(Error::Parameter(format!("(t, x) = ({t}, {x}) outside [0, ∞) × [0, 1]")));
        }
        let mu = self.mu[i];
        let t0 = t - (1.0 - x) / mu;
        let (base, from) = if t0 >= -1e-12 {
            ((self.boundary)(i, t0.max(0.0)), t0.max(0.0))
        } else {
            match self.initial {
                Some(init) => (init(i, x + mu * t), 0.0),
                None => return Err(Error::ValidityWindow { t, required: self.required_wait(i, x) }),
            }
        };
        let coupled: Vec<usize> = (0..i).filter(|&j| self.couples(i, j)).collect();
        if coupled.is_empty() || t - from <= 0.0 {
            return Ok(base);
        }
        let q = self.quad;
        let h = (t - from) / q as f64;
        let mut acc = 0.0;
        for k in 0..=q {
            let tau = from + k as f64 * h;
            let w = if k == 0 || k == q { 0.5 * h } else { h };
            let xi = (x + mu * (t - tau)).min(1.0);
            for &j in &coupled {
                acc += w * self.g.eval(i, j, xi) * self.value(j, tau, 0.0)?;
            }
        }
        Ok(base + acc)
    }
}

/// All components of `β(t, x)`; see [`BetaPropagator`].
pub fn analytic_beta_propagator(
    kernels: &ControllerKernels,
    mu: &[f64],
    initial_beta: Option<&dyn Fn(usize, f64) -> f64>,
    boundary_b: &dyn Fn(usize, f64) -> f64,
    t: f64,
    x: f64,
) -> Result<Vec<f64>> {
    let mut p = BetaPropagator::new(mu, &kernels.g, boundary_b);
    if let Some(init) = initial_beta {
        p = p.with_initial(init);
    }
    (0..mu.len()).map(|i| p.value(i, t, x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cascade() -> TraceMatrix {
        let mut g = TraceMatrix::zeros(2, 2, 50);
        for (k, v) in g.entry_mut(1, 0).iter_mut().enumerate() {
            *v = 1.0 + k as f64 / 50.0;
        }
        g
    }

    #[test]
    fn pure_transport_without_coupling() {
        let g = TraceMatrix::zeros(2, 2, 10);
        let b = |i: usize, t: f64| (i as f64 + 1.0) * t;
        let p = BetaPropagator::new(&[2.0, 1.0], &g, &b);
        assert!((p.value(1, 3.0, 0.5).unwrap() - 2.0 * 2.5).abs() < 1e-14);
        match p.value(1, 0.2, 0.0) {
            Err(Error::ValidityWindow { required, .. }) => assert!((required - 1.0).abs() < 1e-14),
            other => panic!("expected validity error, got {other:?}"),
        }
    }

    #[test]
    fn cascade_with_constant_boundary() {
        // β_1 ≡ 1 at x = 0 once t ≥ 1/μ_1; β_2(t,x) = 0 + ∫ g(ξ)/μ_2 dξ over [x, 1]
        let g = cascade();
        let b = |i: usize, _t: f64| if i == 0 { 1.0 } else { 0.0 };
        let p = BetaPropagator::new(&[2.0, 1.0], &g, &b);
        assert!((p.required_wait(1, 0.0) - 1.5).abs() < 1e-14);
        let v = p.value(1, 2.0, 0.25).unwrap();
        let exact = 0.75 + 0.5 * (1.0 - 0.0625);
        assert!((v - exact).abs() < 1e-6, "{v} vs {exact}");
    }

    #[test]
    fn initial_data_extends_window() {
        let g = TraceMatrix::zeros(1, 1, 10);
        let b = |_: usize, _: f64| 0.0;
        let init = |_: usize, x: f64| x * x;
        let p = BetaPropagator::new(&[0.5], &g, &b).with_initial(&init);
        assert!((p.value(0, 0.4, 0.3).unwrap() - 0.25).abs() < 1e-14);
    }
}

use nalgebra::{DMatrix, DVector, LU};

use super::{FieldState, Grid1D};
use crate::error::{Error, Result};
use crate::kernels::transform::{node_weights, NodeWeights};
use crate::kernels::volterra::hcat;
use crate::kernels::ControllerKernels;
use crate::system::HyperbolicSystem;

/// The full-state law `U = −R₁u(1) + ∫₀¹(K(1,ξ)u + L(1,ξ)v)dξ` on a simulation grid.
#[derive(Debug, Clone)]
pub struct FeedbackLaw {
    n: usize,
    m: usize,
    nx: usize,
    weights: NodeWeights,
    r1: DMatrix<f64>,
    implicit: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl FeedbackLaw {
    pub fn new(kernels: &ControllerKernels, sys: &HyperbolicSystem, grid: Grid1D) -> Result<Self> {
        let (n, m) = (sys.n(), sys.m());
        if kernels.n() != n || kernels.m() != m {
            return Err(Error::Dimension(format!(
                "kernels are for (n, m) = ({}, {}), system has ({n}, {m})",
                kernels.n(),
                kernels.m()
            )));
        }
        let nx = grid.nx();
        let weights = node_weights(&hcat(&kernels.k, &kernels.l), nx, nx);
        let wv = weights.w[nx].columns(n, m).into_owned();
        let implicit = (DMatrix::identity(m, m) - wv).lu();
        Ok(Self { n, m, nx, weights, r1: sys.r1.clone(), implicit })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    /// `∫₀¹(Ku + Lv)` with `v(1)` excluded, plus `extra`.
    fn explicit_part(&self, u: &[Vec<f64>], v: &[Vec<f64>], extra: Option<&[f64]>) -> DVector<f64> {
        let (n, nx) = (self.n, self.nx);
        let mut acc = DVector::from_iterator(self.m, extra.map_or(vec![0.0; self.m], |e| e.to_vec()));
        for (k, wk) in self.weights.w.iter().enumerate() {
            for j in 0..n {
                let f = u[j][k];
                if f != 0.0 {
                    acc += wk.column(j) * f;
                }
            }
            if k < nx {
                for j in 0..self.m {
                    let f = v[j][k];
                    if f != 0.0 {
                        acc += wk.column(n + j) * f;
                    }
                }
            }
        }
        acc
    }

    /// Boundary values `v(1)` solving `v(1) = ∫₀¹(Ku + Lv) + extra` given the other nodes.
    pub fn boundary_values(&self, u: &[Vec<f64>], v: &[Vec<f64>], extra: Option<&[f64]>) -> Result<Vec<f64>> {
        let rhs = self.explicit_part(u, v, extra);
        let sol = self
            .implicit
            .solve(&rhs)
            .ok_or_else(|| Error::Parameter("singular boundary closure I − W".into()))?;
        Ok(sol.iter().copied().collect())
    }

    /// Control `U` evaluated on `(u, v)`, including the current `v(1)`.
    pub fn control(&self, u: &[Vec<f64>], v: &[Vec<f64>]) -> Vec<f64> {
        let nx = self.nx;
        let mut acc = self.explicit_part(u, v, None);
        for j in 0..self.m {
            acc += self.weights.w[nx].column(self.n + j) * v[j][nx];
        }
        let un = DVector::from_iterator(self.n, u.iter().map(|p| p[nx]));
        acc -= &self.r1 * un;
        acc.iter().copied().collect()
    }
}

impl FeedbackLaw {
    /// Adds `c·x³` to `v` and `d·(1−x)³` to `u` so that `state` satisfies both
    /// closed-loop boundary conditions at `t = 0`.
    pub fn make_compatible(&self, sys: &HyperbolicSystem, base: &FieldState) -> Result<FieldState> {
        let (n, m, nx) = (self.n, self.m, self.nx);
        if base.nx() != nx || base.u.len() != n || base.v.len() != m {
            return Err(Error::Dimension("state does not match the feedback law".into()));
        }
        let ramp_v: Vec<f64> = (0..=nx).map(|k| (k as f64 / nx as f64).powi(3)).collect();
        let ramp_u: Vec<f64> = (0..=nx).map(|k| (1.0 - k as f64 / nx as f64).powi(3)).collect();
        // u first: the v ramp leaves v(0) alone, the u ramp moves the integral
        let mut start = base.clone();
        for i in 0..n {
            let d = (0..m).map(|j| sys.q0[(i, j)] * start.v[j][0]).sum::<f64>() - start.u[i][0];
            start.u[i].iter_mut().zip(&ramp_u).for_each(|(u, r)| *u += d * r);
        }
        let with = |c: &DVector<f64>| {
            let mut s = start.clone();
            for j in 0..m {
                s.v[j].iter_mut().zip(&ramp_v).for_each(|(v, r)| *v += c[j] * r);
            }
            s
        };
        // v(1) − ∫(Ku + Lv) is affine in c
        let mismatch = |c: &DVector<f64>| {
            let s = with(c);
            let u = self.control(&s.u, &s.v);
            DVector::from_iterator(m, (0..m).map(|j| {
                let refl: f64 = (0..n).map(|i| self.r1[(j, i)] * s.u[i][nx]).sum();
                s.v[j][nx] - refl - u[j]
            }))
        };
        let f0 = mismatch(&DVector::zeros(m));
        let jac = DMatrix::from_fn(m, m, |r, c| mismatch(&DVector::from_fn(m, |k, _| if k == c { 1.0 } else { 0.0 }))[r] - f0[r]);
        let c = jac.lu().solve(&(-f0)).ok_or_else(|| Error::Parameter("cannot match the boundary condition".into()))?;
        Ok(with(&c))
    }
}

/// Control input produced by the full-state law for `state`.
pub fn state_feedback_control(law: &FeedbackLaw, state: &FieldState) -> Result<Vec<f64>> {
    if state.nx() != law.nx() {
        return Err(Error::Dimension(format!("state has {} cells, law was built for {}", state.nx(), law.nx())));
    }
    Ok(law.control(&state.u, &state.v))
}

//! Observer kernels for `ũ = α̃ + ∫₀ˣ M β̃`, `ṽ = β̃ + ∫₀ˣ N β̃`.
//!
//! With `K'_ab(χ,y) = M_ba(1−y, 1−χ)` and `L'_ab(χ,y) = N_ba(1−y, 1−χ)` the
//! observer kernel equations become a controller-type problem with transposed
//! couplings, edge weights `R₁ᵀ` and zero artificial data, so the same Picard
//! engine solves them.

use nalgebra::DMatrix;

use super::controller::TraceMatrix;
use super::picard::{self, ArtificialBoundary, KernelProblem, PicardOptions, PicardReport};
use super::volterra;
use crate::error::Result;
use crate::grid::{KernelMatrix, TriangularGrid};
use crate::system::HyperbolicSystem;

#[derive(Debug, Clone)]
pub struct ObserverKernels {
    pub grid: TriangularGrid,
    /// `n×m`.
    pub m: KernelMatrix,
    /// `m×m`.
    pub n: KernelMatrix,
    /// Strictly upper-triangular `h_ij(x)`.
    pub h: TraceMatrix,
    /// `n×n` and `m×n` kernels of the error target system.
    pub d_plus: KernelMatrix,
    pub d_minus: KernelMatrix,
    /// Output injection gains `M(x,0)Λ⁻` (`n×m`) and `N(x,0)Λ⁻` (`m×m`).
    pub p_plus: TraceMatrix,
    pub p_minus: TraceMatrix,
    pub report: PicardReport,
}

/// The reflected observer problem in controller form.
pub fn reflected_problem(sys: &HyperbolicSystem) -> Result<KernelProblem> {
    sys.ensure_valid()?;
    let (n, m) = (sys.n(), sys.m());
    let hyp_k = DMatrix::from_fn(m, n, |a, b| sys.sigma_pm[(b, a)] / (sys.lambda[b] + sys.mu[a]));
    let hyp_l =
        DMatrix::from_fn(m, m, |a, b| if a == b { 0.0 } else { sys.sigma_mm[(b, a)] / (sys.mu[a] - sys.mu[b]) });
    Ok(KernelProblem {
        lambda: sys.lambda.clone(),
        mu: sys.mu.clone(),
        a_pp: sys.sigma_pp.transpose(),
        a_mp: sys.sigma_pm.transpose(),
        a_pm: sys.sigma_mp.transpose(),
        a_mm: sys.sigma_mm.transpose(),
        hyp_k,
        hyp_l,
        edge: sys.r1.transpose(),
        artificial: ArtificialBoundary::zeros(m),
    })
}

pub fn solve_observer_kernels(sys: &HyperbolicSystem, grid: TriangularGrid, opts: PicardOptions) -> Result<ObserverKernels> {
    let problem = reflected_problem(sys)?;
    let (kr, lr, report) = picard::solve(&problem, grid, opts)?;
    let (n, m) = (sys.n(), sys.m());
    let mk = kr.transposed_reflection();
    let nk = lr.transposed_reflection();
    let top = grid.n();

    let mut h = TraceMatrix::zeros(m, m, top);
    for i in 0..m {
        for j in i + 1..m {
            let out = h.entry_mut(i, j);
            for (a, o) in out.iter_mut().enumerate() {
                let mut v = nk.get(i, j).at(top, a);
                for k in 0..n {
                    v -= sys.r1[(i, k)] * mk.get(k, j).at(top, a);
                }
                *o = v;
            }
        }
    }

    let mut p_plus = TraceMatrix::zeros(n, m, top);
    for i in 0..n {
        for j in 0..m {
            *p_plus.entry_mut(i, j) = mk.get(i, j).trace_xi0().iter().map(|v| v * sys.mu[j]).collect();
        }
    }
    let mut p_minus = TraceMatrix::zeros(m, m, top);
    for i in 0..m {
        for j in 0..m {
            *p_minus.entry_mut(i, j) = nk.get(i, j).trace_xi0().iter().map(|v| v * sys.mu[j]).collect();
        }
    }

    let (d_plus, d_minus) = if n == 0 {
        (KernelMatrix::zeros(grid, 0, 0), KernelMatrix::zeros(grid, m, 0))
    } else {
        // D⁻ = −NΣ⁻⁺ − ∫N D⁻,  D⁺ = −MΣ⁻⁺ − ∫M D⁻
        let d_minus = volterra::solve_left(&volterra::mul_const(&nk, &sys.sigma_mp, -1.0), &nk, -1.0)?;
        let d_plus = volterra::compose(&volterra::mul_const(&mk, &sys.sigma_mp, -1.0), &mk, &d_minus, -1.0)?;
        (d_plus, d_minus)
    };

    Ok(ObserverKernels { grid, m: mk, n: nk, h, d_plus, d_minus, p_plus, p_minus, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_system() {
        let sys = HyperbolicSystem::uncoupled(vec![1.0], vec![1.0, 0.2]);
        let ok = solve_observer_kernels(&sys, TriangularGrid::new(10).unwrap(), PicardOptions::default()).unwrap();
        assert_eq!(ok.m.max_abs() + ok.n.max_abs() + ok.h.max_abs(), 0.0);
        assert_eq!(ok.p_plus.max_abs() + ok.p_minus.max_abs(), 0.0);
    }

    #[test]
    fn boundary_conditions_map_back() {
        let mut sys = HyperbolicSystem::uncoupled(vec![1.0], vec![1.0, 0.4]);
        sys.sigma_pm = DMatrix::from_row_slice(1, 2, &[0.6, -0.4]);
        sys.sigma_mp = DMatrix::from_row_slice(2, 1, &[0.5, 0.3]);
        sys.sigma_mm = DMatrix::from_row_slice(2, 2, &[0.0, 0.3, -0.2, 0.0]);
        sys.r1 = DMatrix::from_row_slice(2, 1, &[0.5, -0.5]);
        let g = TriangularGrid::new(40).unwrap();
        let ok = solve_observer_kernels(&sys, g, PicardOptions::default()).unwrap();
        for a in 0..=40 {
            assert_abs_diff_eq!(ok.m.get(0, 0).at(a, a), 0.6 / 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(ok.m.get(0, 1).at(a, a), -0.4 / 1.4, epsilon = 1e-12);
            // N_ij(1,x) = Σ ρ_ik M_kj(1,x) for j <= i
            let lhs = ok.n.get(1, 0).at(40, a);
            let rhs = -0.5 * ok.m.get(0, 0).at(40, a);
            assert!((lhs - rhs).abs() < 5e-3, "a = {a}: {lhs} vs {rhs}");
        }
        for a in 1..=40 {
            assert_abs_diff_eq!(ok.n.get(0, 1).at(a, 0), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(ok.n.get(0, 1).at(a, a), 0.3 / (0.4 - 1.0), epsilon = 1e-12);
        }
        assert_eq!(ok.h.entry(1, 0).iter().copied().fold(0.0, f64::max), 0.0);
    }
}

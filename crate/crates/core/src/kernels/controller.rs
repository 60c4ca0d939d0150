use nalgebra::DMatrix;

use super::picard::{self, ArtificialBoundary, KernelProblem, PicardOptions, PicardReport};
use super::volterra;
use crate::error::{Error, Result};
use crate::grid::{KernelMatrix, TriangularGrid};
use crate::system::HyperbolicSystem;

/// Functions of `x` sampled on the nodes `x_a = a/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMatrix {
    pub rows: usize,
    pub cols: usize,
    pub n: usize,
    pub values: Vec<Vec<f64>>,
}

impl TraceMatrix {
    pub fn zeros(rows: usize, cols: usize, n: usize) -> Self {
        Self { rows, cols, n, values: vec![vec![0.0; n + 1]; rows * cols] }
    }

    pub fn entry(&self, i: usize, j: usize) -> &[f64] {
        &self.values[i * self.cols + j]
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut Vec<f64> {
        &mut self.values[i * self.cols + j]
    }

    /// Linear interpolation in `x ∈ [0, 1]`.
    pub fn eval(&self, i: usize, j: usize, x: f64) -> f64 {
        let v = self.entry(i, j);
        let t = x.clamp(0.0, 1.0) * self.n as f64;
        let a = (t.floor() as usize).min(self.n - 1);
        let f = t - a as f64;
        (1.0 - f) * v[a] + f * v[a + 1]
    }

    pub fn matrix_at(&self, x: f64) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.eval(i, j, x))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone)]
pub struct ControllerKernels {
    pub grid: TriangularGrid,
    /// `m×n`.
    pub k: KernelMatrix,
    /// `m×m`.
    pub l: KernelMatrix,
    /// Strictly lower-triangular `g_ij(x)`.
    pub g: TraceMatrix,
    /// Inverse-transform blocks: `v = β + ∫(C⁺α + C⁻β)`.
    pub c_plus: KernelMatrix,
    pub c_minus: KernelMatrix,
    pub artificial: ArtificialBoundary,
    pub report: PicardReport,
}

/// The kernel problem of the controller: hypotenuse values
/// `−σ⁻⁺_ij/(μᵢ+λⱼ)`, `−σ⁻⁻_ij/(μᵢ−μⱼ)` and edge weights `λₖq_kj/μⱼ`.
pub fn controller_problem(sys: &HyperbolicSystem, artificial: ArtificialBoundary) -> Result<KernelProblem> {
    sys.ensure_valid()?;
    let (n, m) = (sys.n(), sys.m());
    if artificial.m() != m {
        return Err(Error::Dimension(format!("artificial data is {0}x{0}, system has m = {m}", artificial.m())));
    }
    let hyp_k = DMatrix::from_fn(m, n, |i, j| -sys.sigma_mp[(i, j)] / (sys.mu[i] + sys.lambda[j]));
    let hyp_l =
        DMatrix::from_fn(m, m, |i, j| if i == j { 0.0 } else { -sys.sigma_mm[(i, j)] / (sys.mu[i] - sys.mu[j]) });
    let edge = DMatrix::from_fn(n, m, |k, j| sys.lambda[k] * sys.q0[(k, j)] / sys.mu[j]);
    Ok(KernelProblem {
        lambda: sys.lambda.clone(),
        mu: sys.mu.clone(),
        a_pp: sys.sigma_pp.clone(),
        a_mp: sys.sigma_mp.clone(),
        a_pm: sys.sigma_pm.clone(),
        a_mm: sys.sigma_mm.clone(),
        hyp_k,
        hyp_l,
        edge,
        artificial,
    })
}

/// Solves for `K`, `L` and derives `G` and `C±`.
pub fn picard_solve_controller(
    sys: &HyperbolicSystem,
    grid: TriangularGrid,
    artificial: ArtificialBoundary,
    opts: PicardOptions,
) -> Result<ControllerKernels> {
    let problem = controller_problem(sys, artificial.clone())?;
    let (k, l, report) = picard::solve(&problem, grid, opts)?;
    let g = compute_g(&k, &l, sys)?;
    let (c_minus, c_plus) = solve_c_kernels(&k, &l)?;
    Ok(ControllerKernels { grid, k, l, g, c_plus, c_minus, artificial, report })
}

/// `g_ij(x) = μⱼL_ij(x,0) − Σₚ λₚq_pj K_ip(x,0)` for `i > j`, zero elsewhere.
pub fn compute_g(k: &KernelMatrix, l: &KernelMatrix, sys: &HyperbolicSystem) -> Result<TraceMatrix> {
    let (n, m) = (sys.n(), sys.m());
    if l.rows != m || l.cols != m || k.rows != m || k.cols != n {
        return Err(Error::Dimension("kernel shapes do not match the system".into()));
    }
    let grid = l.get(0, 0).grid;
    let mut g = TraceMatrix::zeros(m, m, grid.n());
    for i in 0..m {
        for j in 0..i {
            let out = g.entry_mut(i, j);
            for (a, o) in out.iter_mut().enumerate() {
                let mut v = sys.mu[j] * l.get(i, j).at(a, 0);
                for p in 0..n {
                    v -= sys.lambda[p] * sys.q0[(p, j)] * k.get(i, p).at(a, 0);
                }
                *o = v;
            }
        }
    }
    Ok(g)
}

/// `C⁻ = L + ∫C⁻L` and `C⁺ = K + ∫C⁻K`.
pub fn solve_c_kernels(k: &KernelMatrix, l: &KernelMatrix) -> Result<(KernelMatrix, KernelMatrix)> {
    let c_minus = volterra::solve_right(l, l)?;
    let c_plus = if k.cols == 0 { k.clone() } else { volterra::compose(k, &c_minus, k, 1.0)? };
    Ok((c_minus, c_plus))
}

impl ControllerKernels {
    pub fn solve(sys: &HyperbolicSystem, n: usize, opts: PicardOptions) -> Result<Self> {
        let art = ArtificialBoundary::constants(&sys.mu, &sys.sigma_mm);
        picard_solve_controller(sys, TriangularGrid::new(n)?, art, opts)
    }

    pub fn n(&self) -> usize {
        self.k.cols
    }

    pub fn m(&self) -> usize {
        self.l.rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_system_gives_zero_kernels() {
        let sys = HyperbolicSystem::uncoupled(vec![1.0], vec![1.0, 0.2]);
        let ck = ControllerKernels::solve(&sys, 12, PicardOptions::default()).unwrap();
        assert_eq!(ck.report.iterations, 1);
        assert_eq!(ck.k.max_abs() + ck.l.max_abs() + ck.g.max_abs(), 0.0);
        assert_eq!(ck.c_plus.max_abs() + ck.c_minus.max_abs(), 0.0);
    }

    #[test]
    fn single_homodirectional_state() {
        let sys = HyperbolicSystem::homodirectional(vec![0.7], DMatrix::zeros(1, 1));
        let ck = ControllerKernels::solve(&sys, 10, PicardOptions::default()).unwrap();
        assert_eq!(ck.l.max_abs(), 0.0);
        assert_eq!(ck.g.rows, 1);
        assert_eq!(ck.g.max_abs(), 0.0);
    }

    #[test]
    fn c_kernels_without_l() {
        let mut sys = HyperbolicSystem::uncoupled(vec![1.0], vec![1.5]);
        sys.sigma_mp[(0, 0)] = 0.8;
        let ck = ControllerKernels::solve(&sys, 16, PicardOptions::default()).unwrap();
        // a single u-state with Q₀ = 0 makes L vanish, so C⁻ = 0 and C⁺ = K
        assert_eq!(ck.l.max_abs(), 0.0);
        assert_eq!(ck.c_minus.max_abs(), 0.0);
        for (a, b) in ck.k.get(0, 0).values.iter().zip(&ck.c_plus.get(0, 0).values) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn invalid_system_rejected() {
        let sys = HyperbolicSystem::uncoupled(vec![1.0], vec![1.0, 1.0]);
        assert!(matches!(
            ControllerKernels::solve(&sys, 8, PicardOptions::default()),
            Err(Error::InvalidSystem(_))
        ));
    }
}

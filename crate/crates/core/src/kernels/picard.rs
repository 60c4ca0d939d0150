//! Successive approximations for kernel systems of controller type.
//!
//! For each row `i` the unknowns are `K_ij` (`j < n`) and `L_ij` (`j < m`) with
//!
//! ```text
//! μᵢ∂ₓK_ij − λⱼ∂_ξK_ij = Σₖ K_ik A⁺⁺_kj + Σₚ L_ip A⁻⁺_pj
//! μᵢ∂ₓL_ij + μⱼ∂_ξL_ij = Σₖ K_ik A⁺⁻_kj + Σₚ L_ip A⁻⁻_pj
//! ```
//!
//! closed by hypotenuse values, the relation `L_ij(x,0) = Σₖ E_kj K_ik(x,0)`
//! for `i <= j` and artificial data on `x = 1` for `i > j`. Rows never
//! reference each other, so each is iterated to convergence on its own.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::characteristics::{k_path, l_path, CharacteristicPath, Terminus};
use crate::error::{Error, Result};
use crate::grid::{DiscontinuityLine, KernelField, KernelMatrix, TriangularGrid};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum BoundaryDatum {
    Constant(f64),
    Function(ScalarFn),
}

impl fmt::Debug for BoundaryDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryDatum::Constant(c) => write!(f, "Constant({c})"),
            BoundaryDatum::Function(_) => write!(f, "Function(..)"),
        }
    }
}

/// Values of `L_ij(1, ξ)` for `i > j`.
#[derive(Debug, Clone)]
pub struct ArtificialBoundary {
    m: usize,
    data: Vec<BoundaryDatum>,
}

impl ArtificialBoundary {
    pub fn zeros(m: usize) -> Self {
        Self { m, data: vec![BoundaryDatum::Constant(0.0); m * m] }
    }

    /// Constants `l_ij = −σ⁻⁻_ij/(μᵢ − μⱼ)`.
    pub fn constants(mu: &[f64], sigma_mm: &DMatrix<f64>) -> Self {
        let m = mu.len();
        let mut out = Self::zeros(m);
        for i in 0..m {
            for j in 0..i {
                out.set_constant(i, j, -sigma_mm[(i, j)] / (mu[i] - mu[j]));
            }
        }
        out
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn set_constant(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.m + j] = BoundaryDatum::Constant(value);
    }

    pub fn set_function(&mut self, i: usize, j: usize, f: ScalarFn) {
        self.data[i * self.m + j] = BoundaryDatum::Function(f);
    }

    pub fn datum(&self, i: usize, j: usize) -> &BoundaryDatum {
        &self.data[i * self.m + j]
    }

    pub fn value(&self, i: usize, j: usize, xi: f64) -> f64 {
        match &self.data[i * self.m + j] {
            BoundaryDatum::Constant(c) => *c,
            BoundaryDatum::Function(f) => f(xi),
        }
    }

    /// `sup |l_ij|` over `[0, 1]`, sampled for functions.
    pub fn sup(&self, i: usize, j: usize) -> f64 {
        match &self.data[i * self.m + j] {
            BoundaryDatum::Constant(c) => c.abs(),
            BoundaryDatum::Function(f) => (0..=4000).map(|k| f(k as f64 / 4000.0).abs()).fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone)]
pub struct KernelProblem {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub a_pp: DMatrix<f64>,
    pub a_mp: DMatrix<f64>,
    pub a_pm: DMatrix<f64>,
    pub a_mm: DMatrix<f64>,
    /// `K_ij(x, x)`, `m×n`.
    pub hyp_k: DMatrix<f64>,
    /// `L_ij(x, x)` for `i != j`, `m×m`.
    pub hyp_l: DMatrix<f64>,
    /// `n×m` edge relation.
    pub edge: DMatrix<f64>,
    pub artificial: ArtificialBoundary,
}

impl KernelProblem {
    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn m(&self) -> usize {
        self.mu.len()
    }

    /// Flagged lines of row `i`: `ξ = (μⱼ/μᵢ)x` for `j > i`.
    pub fn row_lines(&self, i: usize) -> Vec<DiscontinuityLine> {
        (i + 1..self.m()).map(|j| DiscontinuityLine::through_origin(self.mu[j] / self.mu[i])).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 200 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardReport {
    pub iterations: usize,
    /// Sup-norm of `H^{q} − H^{q−1}` for every iteration performed.
    pub increments: Vec<f64>,
    pub converged: bool,
    /// Last increment, i.e. how far the final iterate moves under one more sweep.
    pub residual: f64,
}

impl PicardReport {
    /// Combines per-row reports: increments are the row-wise maxima.
    pub fn merge(reports: &[PicardReport]) -> PicardReport {
        let iterations = reports.iter().map(|r| r.iterations).max().unwrap_or(0);
        let increments = (0..iterations)
            .map(|q| reports.iter().filter_map(|r| r.increments.get(q)).fold(0.0, |a, &b| f64::max(a, b)))
            .collect();
        PicardReport {
            iterations,
            increments,
            converged: reports.iter().all(|r| r.converged),
            residual: reports.iter().map(|r| r.residual).fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RowSolution {
    pub k: Vec<KernelField>,
    pub l: Vec<KernelField>,
    pub report: PicardReport,
}

/// Solves all rows and assembles `K` (`m×n`) and `L` (`m×m`).
pub fn solve(
    problem: &KernelProblem,
    grid: TriangularGrid,
    opts: PicardOptions,
) -> Result<(KernelMatrix, KernelMatrix, PicardReport)> {
    if !(opts.tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let (n, m) = (problem.n(), problem.m());
    let rows: Vec<RowSolution> = (0..m).into_par_iter().map(|i| solve_row(problem, grid, i, opts)).collect();
    let report = PicardReport::merge(&rows.iter().map(|r| r.report.clone()).collect::<Vec<_>>());
    if !report.converged {
        return Err(Error::NonConvergence(Box::new(report)));
    }
    let mut k = KernelMatrix::zeros(grid, m, n);
    let mut l = KernelMatrix::zeros(grid, m, m);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, f) in row.k.into_iter().enumerate() {
            *k.get_mut(i, j) = f;
        }
        for (j, f) in row.l.into_iter().enumerate() {
            *l.get_mut(i, j) = f;
        }
    }
    Ok((k, l, report))
}

/// Iterates row `i` on its own; non-convergence is reported, not raised.
pub fn solve_row(problem: &KernelProblem, grid: TriangularGrid, i: usize, opts: PicardOptions) -> RowSolution {
    let (n, m) = (problem.n(), problem.m());
    let nf = n + m;
    let lines = problem.row_lines(i);
    let nodes = grid.node_count();
    let mu_i = problem.mu[i];

    // coef[f][g]: weight of field g in the source of field f
    let mut coef = vec![vec![0.0; nf]; nf];
    for j in 0..n {
        for k in 0..n {
            coef[j][k] = problem.a_pp[(k, j)];
        }
        for p in 0..m {
            coef[j][n + p] = problem.a_mp[(p, j)];
        }
    }
    for j in 0..m {
        for k in 0..n {
            coef[n + j][k] = problem.a_pm[(k, j)];
        }
        for p in 0..m {
            coef[n + j][n + p] = problem.a_mm[(p, j)];
        }
    }

    let mut fields = vec![vec![0.0; nodes]; nf];
    let mut increments = Vec::new();
    let mut converged = false;
    let mut integrand = vec![0.0; nodes];
    let mut next = vec![0.0; nodes];

    // Gauss–Seidel over the fields of the row: each field is integrated
    // against the latest values of the others.
    for _ in 0..opts.max_iter {
        let mut inc: f64 = 0.0;
        for f in 0..nf {
            integrand.iter_mut().for_each(|v| *v = 0.0);
            for g in 0..nf {
                let c = coef[f][g];
                if c != 0.0 {
                    for (o, v) in integrand.iter_mut().zip(&fields[g]) {
                        *o += c * v;
                    }
                }
            }
            let active = integrand.iter().any(|v| *v != 0.0);
            if f < n {
                let (lam, k0) = (problem.lambda[f], problem.hyp_k[(i, f)]);
                for (a, b) in grid.nodes() {
                    let (x, xi) = (grid.coord(a), grid.coord(b));
                    let path = k_path(mu_i, lam, x, xi);
                    let integral = if active { integrate(grid, &path, (a, b), &integrand, &lines) } else { 0.0 };
                    next[grid.index(a, b)] = k0 + integral;
                }
            } else {
                let j = f - n;
                for (a, b) in grid.nodes() {
                    let (x, xi) = (grid.coord(a), grid.coord(b));
                    let path = l_path(i, j, mu_i, problem.mu[j], x, xi);
                    let end = match path.terminus {
                        Terminus::Hypotenuse => problem.hyp_l[(i, j)],
                        Terminus::XOne => problem.artificial.value(i, j, path.endpoint.1),
                        Terminus::XiZero => {
                            let st = grid.horizontal_stencil(0, path.endpoint.0, &[], path.endpoint);
                            (0..n).map(|k| problem.edge[(k, j)] * st.apply(&fields[k])).sum()
                        }
                    };
                    let integral = if active { integrate(grid, &path, (a, b), &integrand, &lines) } else { 0.0 };
                    next[grid.index(a, b)] = end - path.eps as f64 * integral;
                }
            }
            inc = fields[f].iter().zip(&next).fold(inc, |m, (a, b)| m.max((a - b).abs()));
            std::mem::swap(&mut fields[f], &mut next);
        }
        increments.push(inc);
        if inc < opts.tol {
            converged = true;
            break;
        }
    }

    let wrap = |v: Vec<f64>| KernelField { grid, values: v, lines: lines.clone() };
    let mut fields = fields.into_iter();
    let k: Vec<KernelField> = fields.by_ref().take(n).map(wrap).collect();
    let l: Vec<KernelField> = fields.map(wrap).collect();
    let residual = increments.last().copied().unwrap_or(0.0);
    RowSolution {
        k,
        l,
        report: PicardReport { iterations: increments.len(), increments, converged, residual },
    }
}

/// Composite trapezoid of `values` along `path`, sampled where the path
/// crosses gridlines and split at flagged lines.
pub(crate) fn integrate(
    grid: TriangularGrid,
    path: &CharacteristicPath,
    origin: (usize, usize),
    values: &[f64],
    lines: &[DiscontinuityLine],
) -> f64 {
    let len = path.length;
    if len <= 0.0 {
        return 0.0;
    }
    let h = grid.step();
    let (dx, dxi) = path.direction;
    let vertical = dx.abs() >= dxi.abs();
    let ds = if vertical { h / dx.abs() } else { h / dxi.abs() };
    let guard = 1e-9 * ds;
    let margin = 3.5 * h;

    let mut breaks = [0.0; 8];
    let mut nb = 0;
    breaks[nb] = 0.0;
    nb += 1;
    for l in lines {
        if let Some(s) = l.crossing(path.origin, path.direction) {
            if s > guard && s < len - guard && nb < 7 {
                breaks[nb] = s;
                nb += 1;
            }
        }
    }
    breaks[1..nb].sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks[nb] = len;
    nb += 1;

    let (a0, b0) = origin;
    let eval_grid = |k: usize, r: (f64, f64)| -> f64 {
        // k-th gridline crossing after the origin
        let s = k as f64 * ds;
        let (x, xi) = path.point_at(s);
        // every stencil node lies within 3h of the point, so side checks are moot far from the lines
        let near: &[DiscontinuityLine] = if lines.iter().any(|l| l.distance(x, xi) < margin) { lines } else { &[] };
        if vertical {
            let a = if dx < 0.0 { a0 - k } else { a0 + k };
            grid.vertical_stencil(a, xi, near, r).apply(values)
        } else {
            let b = if dxi < 0.0 { b0 - k } else { b0 + k };
            grid.horizontal_stencil(b, x, near, r).apply(values)
        }
    };
    let eval_at = |s: f64, r: (f64, f64)| -> f64 {
        let (x, xi) = path.point_at(s);
        grid.interpolate(values, x, xi, lines, r)
    };

    let mut total = 0.0;
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(grid.n() + 4);
    for p in 0..nb - 1 {
        let (s0, s1) = (breaks[p], breaks[p + 1]);
        let r = path.point_at(0.5 * (s0 + s1));
        pts.clear();
        let v0 = if p == 0 {
            let node = grid.index(a0, b0);
            let (x, xi) = path.origin;
            if lines.iter().all(|l| l.above(x, xi) == l.above(r.0, r.1)) {
                values[node]
            } else {
                grid.vertical_stencil(a0, xi, lines, r).apply(values)
            }
        } else {
            eval_at(s0, r)
        };
        pts.push((s0, v0));
        let mut k = (s0 / ds + 1e-9) as usize + 1;
        loop {
            let s = k as f64 * ds;
            if s >= s1 - 0.25 * ds {
                break;
            }
            if s > s0 + 0.25 * ds {
                pts.push((s, eval_grid(k, r)));
            }
            k += 1;
        }
        pts.push((s1, eval_at(s1, r)));
        total += cubic_quadrature(&pts);
    }
    total
}

/// Integral of the piecewise cubic through consecutive samples `(s, f(s))`.
///
/// Each interval uses the four nearest samples and two-point Gauss–Legendre,
/// which is exact for cubics.
pub(crate) fn cubic_quadrature(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * (pts[1].0 - pts[0].0) * (pts[0].1 + pts[1].1),
        _ => {
            let order = n.min(4);
            let g = 0.5 / 3f64.sqrt();
            let mut total = 0.0;
            for j in 0..n - 1 {
                let start = j.saturating_sub(1).min(n - order);
                let nodes = &pts[start..start + order];
                let (a, b) = (pts[j].0, pts[j + 1].0);
                if order == 4 && start + 1 == j {
                    let h = b - a;
                    let tol = 1e-9 * h;
                    if (nodes[1].0 - nodes[0].0 - h).abs() < tol && (nodes[3].0 - nodes[2].0 - h).abs() < tol {
                        total += h * (13.0 * (nodes[1].1 + nodes[2].1) - nodes[0].1 - nodes[3].1) / 24.0;
                        continue;
                    }
                }
                let (mid, half) = (0.5 * (a + b), b - a);
                for t in [mid - g * half, mid + g * half] {
                    let mut v = 0.0;
                    for (q, &(sq, fq)) in nodes.iter().enumerate() {
                        let mut basis = 1.0;
                        for (p, &(sp, _)) in nodes.iter().enumerate() {
                            if p != q {
                                basis *= (t - sp) / (sq - sp);
                            }
                        }
                        v += basis * fq;
                    }
                    total += 0.5 * half * v;
                }
            }
            total
        }
    }
}

//! Second-kind Volterra equations on the triangle, solved by Gauss–Seidel
//! successive substitution along gridlines.
//!
//! Integrals `∫_ξ^x X(x,s) Y(s,ξ) ds` run along the vertical line through `x`
//! for the left factor and the horizontal line through `ξ` for the right one,
//! split wherever either line meets a flagged discontinuity.

use crate::error::{Error, Result};
use crate::grid::{push_unique, DiscontinuityLine, KernelField, KernelMatrix, Stencil, TriangularGrid};

const MAX_SWEEPS: usize = 200;
const SWEEP_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy)]
struct QPoint {
    w: f64,
    left: Stencil,
    right: Stencil,
}

/// Quadrature for `∫_{ξ_b}^{x_a}` with stencils on vertical line `a` and horizontal line `b`.
fn build_rule(grid: TriangularGrid, a: usize, b: usize, lines: &[DiscontinuityLine], out: &mut Vec<QPoint>) {
    out.clear();
    if a == b {
        return;
    }
    let h = grid.step();
    let (xa, xb) = (grid.coord(a), grid.coord(b));
    let node = |c: usize| QPoint {
        w: h,
        left: Stencil::node(grid.index(a, c)),
        right: Stencil::node(grid.index(c, b)),
    };
    if lines.is_empty() {
        for c in b..=a {
            let mut p = node(c);
            if c == b || c == a {
                p.w = 0.5 * h;
            }
            out.push(p);
        }
        return;
    }

    let guard = 1e-9 * h;
    let mut breaks = vec![xb];
    for l in lines {
        for s in [l.crossing((xa, 0.0), (0.0, 1.0)), l.crossing((0.0, xb), (1.0, 0.0))].into_iter().flatten() {
            if s > xb + guard && s < xa - guard && !breaks.iter().any(|t: &f64| (t - s).abs() < guard) {
                breaks.push(s);
            }
        }
    }
    breaks.sort_by(|p, q| p.partial_cmp(q).unwrap());
    breaks.push(xa);

    let same = |p: (f64, f64), r: (f64, f64)| lines.iter().all(|l| l.above(p.0, p.1) == l.above(r.0, r.1));
    let snap = |s: f64| -> Option<usize> {
        let c = (s / h).round();
        ((s - c * h).abs() < guard).then_some(c as usize)
    };
    for piece in breaks.windows(2) {
        let (s0, s1) = (piece[0], piece[1]);
        let mid = 0.5 * (s0 + s1);
        let (rl, rr) = ((xa, mid), (mid, xb));
        let point = |s: f64, w: f64| -> QPoint {
            if let Some(c) = snap(s) {
                if same((xa, grid.coord(c)), rl) && same((grid.coord(c), xb), rr) {
                    let mut p = node(c);
                    p.w = w;
                    return p;
                }
            }
            QPoint {
                w,
                left: grid.vertical_stencil(a, s, lines, rl),
                right: grid.horizontal_stencil(b, s, lines, rr),
            }
        };
        let mut ss = vec![s0];
        let mut c = (s0 / h + 1e-9).floor() as usize + 1;
        while (c as f64) * h < s1 - guard {
            ss.push(c as f64 * h);
            c += 1;
        }
        ss.push(s1);
        for k in 0..ss.len() {
            let mut w = 0.0;
            if k > 0 {
                w += 0.5 * (ss[k] - ss[k - 1]);
            }
            if k + 1 < ss.len() {
                w += 0.5 * (ss[k + 1] - ss[k]);
            }
            out.push(point(ss[k], w));
        }
    }
}

/// Node-major storage: the `rows×cols` matrix of every node is contiguous.
struct NodeMats {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl NodeMats {
    fn from(km: &KernelMatrix) -> Self {
        let nodes = km.fields.first().map_or(0, |f| f.values.len());
        let (rows, cols) = (km.rows, km.cols);
        let mut data = vec![0.0; nodes * rows * cols];
        for (e, f) in km.fields.iter().enumerate() {
            for (node, v) in f.values.iter().enumerate() {
                data[node * rows * cols + e] = *v;
            }
        }
        Self { rows, cols, data }
    }

    fn zeros(rows: usize, cols: usize, nodes: usize) -> Self {
        Self { rows, cols, data: vec![0.0; nodes * rows * cols] }
    }

    #[inline]
    fn at(&self, node: usize) -> &[f64] {
        let sz = self.rows * self.cols;
        &self.data[node * sz..(node + 1) * sz]
    }

    #[inline]
    fn combo(&self, st: &Stencil, out: &mut [f64]) {
        out.fill(0.0);
        for (node, w) in st.terms() {
            for (o, p) in out.iter_mut().zip(self.at(node)) {
                *o += w * p;
            }
        }
    }

    fn into_matrix(self, grid: TriangularGrid, lines: &[DiscontinuityLine]) -> KernelMatrix {
        let sz = self.rows * self.cols;
        let fields = (0..sz)
            .map(|e| KernelField {
                grid,
                values: self.data.iter().skip(e).step_by(sz).copied().collect(),
                lines: lines.to_vec(),
            })
            .collect();
        KernelMatrix { rows: self.rows, cols: self.cols, fields }
    }
}

/// `acc += w · lhs(r×k) · rhs(k×c)`.
#[inline]
fn gemm_acc(acc: &mut [f64], w: f64, lhs: &[f64], rhs: &[f64], r: usize, k: usize, c: usize) {
    for i in 0..r {
        for p in 0..k {
            let l = w * lhs[i * k + p];
            if l != 0.0 {
                for j in 0..c {
                    acc[i * c + j] += l * rhs[p * c + j];
                }
            }
        }
    }
}

fn union_lines(mats: &[&KernelMatrix]) -> Vec<DiscontinuityLine> {
    let mut out = Vec::new();
    for m in mats {
        for l in m.all_lines() {
            push_unique(&mut out, l);
        }
    }
    out
}

fn grid_of(m: &KernelMatrix) -> Result<TriangularGrid> {
    m.fields.first().map(|f| f.grid).ok_or_else(|| Error::Dimension("empty kernel matrix".into()))
}

fn check(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Dimension(what.into()))
    }
}

/// `X(x,ξ) = F(x,ξ) + ∫_ξ^x X(x,s) B(s,ξ) ds`.
pub fn solve_right(f: &KernelMatrix, b: &KernelMatrix) -> Result<KernelMatrix> {
    check(b.rows == b.cols && f.cols == b.rows, "solve_right needs F r×c and square B c×c")?;
    if f.fields.is_empty() {
        return Ok(f.clone());
    }
    let grid = grid_of(f)?;
    let lines = union_lines(&[f, b]);
    let (r, c) = (f.rows, f.cols);
    let fm = NodeMats::from(f);
    let bm = NodeMats::from(b);
    let mut x = NodeMats::from(f);
    let mut rule = Vec::new();
    let mut rules: Vec<Vec<QPoint>> = Vec::new();
    let (mut lv, mut rv, mut acc) = (vec![0.0; r * c], vec![0.0; c * c], vec![0.0; r * c]);
    let n = grid.n();
    for a in 0..=n {
        rules.clear();
        for bb in 0..=a {
            build_rule(grid, a, bb, &lines, &mut rule);
            rules.push(rule.clone());
        }
        let mut sweeps = 0;
        loop {
            let (mut change, mut scale) = (0.0f64, 1.0f64);
            for bb in (0..=a).rev() {
                acc.copy_from_slice(fm.at(grid.index(a, bb)));
                for q in &rules[bb] {
                    x.combo(&q.left, &mut lv);
                    bm.combo(&q.right, &mut rv);
                    gemm_acc(&mut acc, q.w, &lv, &rv, r, c, c);
                }
                let node = grid.index(a, bb);
                let sz = r * c;
                for k in 0..sz {
                    change = change.max((x.data[node * sz + k] - acc[k]).abs());
                    scale = scale.max(acc[k].abs());
                    x.data[node * sz + k] = acc[k];
                }
            }
            sweeps += 1;
            if change <= SWEEP_TOL * scale {
                break;
            }
            if sweeps >= MAX_SWEEPS {
                return Err(Error::VolterraNonConvergence { sweeps, change });
            }
        }
    }
    Ok(x.into_matrix(grid, &lines))
}

/// `X(x,ξ) = F(x,ξ) + sign·∫_ξ^x A(x,s) X(s,ξ) ds`.
pub fn solve_left(f: &KernelMatrix, a: &KernelMatrix, sign: f64) -> Result<KernelMatrix> {
    check(a.rows == a.cols && a.cols == f.rows, "solve_left needs square A r×r and F r×c")?;
    if f.fields.is_empty() {
        return Ok(f.clone());
    }
    let grid = grid_of(f)?;
    let lines = union_lines(&[f, a]);
    let (r, c) = (f.rows, f.cols);
    let fm = NodeMats::from(f);
    let am = NodeMats::from(a);
    let mut x = NodeMats::from(f);
    let mut rule = Vec::new();
    let mut rules: Vec<Vec<QPoint>> = Vec::new();
    let (mut lv, mut rv, mut acc) = (vec![0.0; r * r], vec![0.0; r * c], vec![0.0; r * c]);
    let n = grid.n();
    for b in 0..=n {
        rules.clear();
        for aa in b..=n {
            build_rule(grid, aa, b, &lines, &mut rule);
            rules.push(rule.clone());
        }
        let mut sweeps = 0;
        loop {
            let (mut change, mut scale) = (0.0f64, 1.0f64);
            for aa in b..=n {
                acc.copy_from_slice(fm.at(grid.index(aa, b)));
                for q in &rules[aa - b] {
                    am.combo(&q.left, &mut lv);
                    x.combo(&q.right, &mut rv);
                    gemm_acc(&mut acc, sign * q.w, &lv, &rv, r, r, c);
                }
                let node = grid.index(aa, b);
                let sz = r * c;
                for k in 0..sz {
                    change = change.max((x.data[node * sz + k] - acc[k]).abs());
                    scale = scale.max(acc[k].abs());
                    x.data[node * sz + k] = acc[k];
                }
            }
            sweeps += 1;
            if change <= SWEEP_TOL * scale {
                break;
            }
            if sweeps >= MAX_SWEEPS {
                return Err(Error::VolterraNonConvergence { sweeps, change });
            }
        }
    }
    Ok(x.into_matrix(grid, &lines))
}

/// `F(x,ξ) + sign·∫_ξ^x X(x,s) Y(s,ξ) ds`.
pub fn compose(f: &KernelMatrix, x: &KernelMatrix, y: &KernelMatrix, sign: f64) -> Result<KernelMatrix> {
    check(x.cols == y.rows && f.rows == x.rows && f.cols == y.cols, "compose shape mismatch")?;
    if f.fields.is_empty() {
        return Ok(f.clone());
    }
    let grid = grid_of(f)?;
    let lines = union_lines(&[f, x, y]);
    let (r, k, c) = (x.rows, x.cols, y.cols);
    let xm = NodeMats::from(x);
    let ym = NodeMats::from(y);
    let fm = NodeMats::from(f);
    let mut out = NodeMats::zeros(r, c, grid.node_count());
    let mut rule = Vec::new();
    let (mut lv, mut rv, mut acc) = (vec![0.0; r * k], vec![0.0; k * c], vec![0.0; r * c]);
    for (a, b) in grid.nodes() {
        let node = grid.index(a, b);
        acc.copy_from_slice(fm.at(node));
        build_rule(grid, a, b, &lines, &mut rule);
        for q in &rule {
            xm.combo(&q.left, &mut lv);
            ym.combo(&q.right, &mut rv);
            gemm_acc(&mut acc, sign * q.w, &lv, &rv, r, k, c);
        }
        out.data[node * r * c..(node + 1) * r * c].copy_from_slice(&acc);
    }
    Ok(out.into_matrix(grid, &lines))
}

/// `[A B]` for matrices with equal row counts.
pub fn hcat(a: &KernelMatrix, b: &KernelMatrix) -> KernelMatrix {
    assert_eq!(a.rows, b.rows);
    let mut fields = Vec::with_capacity(a.rows * (a.cols + b.cols));
    for i in 0..a.rows {
        fields.extend((0..a.cols).map(|j| a.get(i, j).clone()));
        fields.extend((0..b.cols).map(|j| b.get(i, j).clone()));
    }
    KernelMatrix { rows: a.rows, cols: a.cols + b.cols, fields }
}

/// Columns `from..to` of `m`.
pub fn columns(m: &KernelMatrix, from: usize, to: usize) -> KernelMatrix {
    let mut fields = Vec::with_capacity(m.rows * (to - from));
    for i in 0..m.rows {
        fields.extend((from..to).map(|j| m.get(i, j).clone()));
    }
    KernelMatrix { rows: m.rows, cols: to - from, fields }
}

/// Pointwise `m · c` for a constant matrix `c`.
pub fn mul_const(m: &KernelMatrix, c: &nalgebra::DMatrix<f64>, scale: f64) -> KernelMatrix {
    assert_eq!(m.cols, c.nrows());
    let grid = m.fields.first().map(|f| f.grid);
    let mut fields = Vec::with_capacity(m.rows * c.ncols());
    for i in 0..m.rows {
        for j in 0..c.ncols() {
            let g = grid.expect("non-empty product");
            let mut f = KernelField::zeros(g);
            for p in 0..m.cols {
                let w = scale * c[(p, j)];
                if w != 0.0 {
                    for (o, v) in f.values.iter_mut().zip(&m.get(i, p).values) {
                        *o += w * v;
                    }
                }
                for &l in &m.get(i, p).lines {
                    push_unique(&mut f.lines, l);
                }
            }
            fields.push(f);
        }
    }
    KernelMatrix { rows: m.rows, cols: c.ncols(), fields }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn constant(grid: TriangularGrid, c: f64) -> KernelMatrix {
        KernelMatrix { rows: 1, cols: 1, fields: vec![KernelField::from_fn(grid, |_, _| c)] }
    }

    fn series(c: f64, d: f64) -> f64 {
        // Σ_{k≥1} c^k d^{k−1}/(k−1)! = c·e^{cd}
        c * (c * d).exp()
    }

    #[test]
    fn constant_kernel_right_and_left() {
        let g = TriangularGrid::new(100).unwrap();
        let l = constant(g, 0.8);
        let x = solve_right(&l, &l).unwrap();
        let y = solve_left(&l, &l, 1.0).unwrap();
        for &(a, b) in &[(100, 0), (70, 20), (50, 50)] {
            let want = series(0.8, g.coord(a) - g.coord(b));
            assert_abs_diff_eq!(x.get(0, 0).at(a, b), want, epsilon = 2e-5);
            assert_abs_diff_eq!(y.get(0, 0).at(a, b), want, epsilon = 2e-5);
        }
    }

    #[test]
    fn compose_of_constants() {
        let g = TriangularGrid::new(20).unwrap();
        let one = constant(g, 1.0);
        let zero = constant(g, 0.0);
        let p = compose(&zero, &one, &one, 2.0).unwrap();
        assert_abs_diff_eq!(p.get(0, 0).at(20, 5), 2.0 * 0.75, epsilon = 1e-14);
    }

    #[test]
    fn split_rule_integrates_step_exactly() {
        let g = TriangularGrid::new(20).unwrap();
        let line = DiscontinuityLine::through_origin(0.33);
        let step = KernelField::from_fn(g, |x, xi| if line.above(x, xi) { 2.0 } else { 0.0 }).with_lines(vec![line]);
        let x = KernelMatrix { rows: 1, cols: 1, fields: vec![step] };
        let one = constant(g, 1.0);
        let zero = constant(g, 0.0);
        let p = compose(&zero, &x, &one, 1.0).unwrap();
        // ∫_0^1 X(1,s) ds with X = 2 above s = 0.33
        assert_abs_diff_eq!(p.get(0, 0).at(20, 0), 2.0 * 0.67, epsilon = 1e-12);
    }
}

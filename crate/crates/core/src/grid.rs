//! Nodes `(a/N, b/N)` with `b <= a` on the triangle `0 <= ξ <= x <= 1`.

use crate::error::{Error, Result};

/// Points with `|line(p)| <= SIDE_TOL` count as lying below a line.
pub const SIDE_TOL: f64 = 1e-12;
const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TriangularGrid {
    n: usize,
}

impl TriangularGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("triangular grid needs N >= 2, got {n}")));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn node_count(&self) -> usize {
        (self.n + 1) * (self.n + 2) / 2
    }

    #[inline]
    pub fn index(&self, a: usize, b: usize) -> usize {
        debug_assert!(b <= a && a <= self.n);
        a * (a + 1) / 2 + b
    }

    #[inline]
    pub fn coord(&self, a: usize) -> f64 {
        a as f64 / self.n as f64
    }

    /// All `(a, b)` in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> {
        let n = self.n;
        (0..=n).flat_map(|a| (0..=a).map(move |b| (a, b)))
    }

    pub fn contains(x: f64, xi: f64) -> bool {
        xi >= -DOMAIN_SLACK && xi <= x + DOMAIN_SLACK && x <= 1.0 + DOMAIN_SLACK
    }

    pub fn check_domain(x: f64, xi: f64) -> Result<()> {
        if Self::contains(x, xi) {
            Ok(())
        } else {
            Err(Error::Domain { x, xi })
        }
    }

    /// Stencil on the vertical gridline `x = x_a` at height `xi`.
    pub fn vertical_stencil(&self, a: usize, xi: f64, lines: &[DiscontinuityLine], r: (f64, f64)) -> Stencil {
        let x = self.coord(a);
        let h = self.step();
        line_stencil(0, a, xi * self.n as f64, |k| (x, k as f64 * h), |k| self.index(a, k), lines, r)
    }

    /// Stencil on the horizontal gridline `ξ = ξ_b` at abscissa `x`.
    pub fn horizontal_stencil(&self, b: usize, x: f64, lines: &[DiscontinuityLine], r: (f64, f64)) -> Stencil {
        let xi = self.coord(b);
        let h = self.step();
        line_stencil(b, self.n, x * self.n as f64, |k| (k as f64 * h, xi), |k| self.index(k, b), lines, r)
    }

    /// Stencil on the hypotenuse at `(c, c)`.
    pub fn diagonal_stencil(&self, c: f64, lines: &[DiscontinuityLine], r: (f64, f64)) -> Stencil {
        let h = self.step();
        line_stencil(0, self.n, c * self.n as f64, |k| (k as f64 * h, k as f64 * h), |k| self.index(k, k), lines, r)
    }

    /// Interpolates node values at `(x, xi)`, using only nodes on the same side
    /// of every flagged line as the reference point `r`.
    pub fn interpolate(&self, values: &[f64], x: f64, xi: f64, lines: &[DiscontinuityLine], r: (f64, f64)) -> f64 {
        let n = self.n;
        let x = x.clamp(0.0, 1.0);
        let xi = xi.clamp(0.0, x);
        let ta = x * n as f64;
        let a = (ta as usize).min(n - 1);
        let fx = ta - a as f64;
        let same = |p: (f64, f64)| lines.iter().all(|l| l.above(p.0, p.1) == l.above(r.0, r.1));
        if fx <= 1e-12 {
            if a == 0 && !same((0.0, 0.0)) {
                // the origin lies on the other side: take the limit from the next gridline
                return self.vertical_stencil(1, 0.0, lines, r).apply(values);
            }
            return self.vertical_stencil(a, xi, lines, r).apply(values);
        }
        if fx >= 1.0 - 1e-12 {
            return self.vertical_stencil(a + 1, xi, lines, r).apply(values);
        }
        let xa = self.coord(a);
        if xi <= xa {
            let v0 = self.vertical_stencil(a, xi, lines, r).apply(values);
            let v1 = self.vertical_stencil(a + 1, xi, lines, r).apply(values);
            (1.0 - fx) * v0 + fx * v1
        } else {
            // cell cut by the hypotenuse: linear on (a,a), (a+1,a), (a+1,a+1)
            let h = self.step();
            if !(same((xa, xa)) && same((xa + h, xa)) && same((xa + h, xa + h))) {
                return self.vertical_stencil(a + 1, xi, lines, r).apply(values);
            }
            let fxi = (xi - xa) * n as f64;
            let f00 = values[self.index(a, a)];
            let f10 = values[self.index(a + 1, a)];
            let f11 = values[self.index(a + 1, a + 1)];
            f00 + fx * (f10 - f00) + fxi * (f11 - f10)
        }
    }
}

/// Interpolation weights over up to four nodes on one gridline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub idx: [usize; 4],
    pub w: [f64; 4],
    pub len: usize,
}

impl Stencil {
    pub fn node(i: usize) -> Self {
        Self { idx: [i; 4], w: [1.0, 0.0, 0.0, 0.0], len: 1 }
    }

    fn pair(i0: usize, i1: usize, f: f64) -> Self {
        Self { idx: [i0, i1, i1, i1], w: [1.0 - f, f, 0.0, 0.0], len: 2 }
    }

    #[inline]
    pub fn apply(&self, v: &[f64]) -> f64 {
        (0..self.len).map(|k| self.w[k] * v[self.idx[k]]).sum()
    }

    /// `(node, weight)` pairs.
    pub fn terms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len).map(|k| (self.idx[k], self.w[k]))
    }
}

/// Cubic Lagrange weights at offset `t` from the first of four unit-spaced nodes.
fn cubic_weights(t: f64) -> [f64; 4] {
    [
        -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0,
        t * (t - 2.0) * (t - 3.0) / 2.0,
        -t * (t - 1.0) * (t - 3.0) / 2.0,
        t * (t - 1.0) * (t - 2.0) / 6.0,
    ]
}

/// Stencil at fractional position `t ∈ [lo, hi]` along a gridline whose nodes
/// are `lo..=hi`. Prefers a cubic over four same-side nodes, then a linear
/// pair, then a single node.
fn line_stencil(
    lo: usize,
    hi: usize,
    t: f64,
    pos: impl Fn(usize) -> (f64, f64),
    idx: impl Fn(usize) -> usize,
    lines: &[DiscontinuityLine],
    r: (f64, f64),
) -> Stencil {
    if hi == lo {
        return Stencil::node(idx(lo));
    }
    // truncation is floor here: t >= 0, and negative t saturates to 0
    let k = (t as usize).max(lo).min(hi - 1);
    let same_side = |j: usize| {
        let p = pos(j);
        lines.iter().all(|l| l.above(p.0, p.1) == l.above(r.0, r.1))
    };
    let cubic = |start: usize| {
        let w = cubic_weights(t - start as f64);
        Stencil { idx: [idx(start), idx(start + 1), idx(start + 2), idx(start + 3)], w, len: 4 }
    };
    if lines.is_empty() && hi - lo >= 3 {
        return cubic((k.max(lo + 1) - 1).min(hi - 3));
    }
    let ok = |j: usize| j >= lo && j <= hi && same_side(j);
    if hi - lo >= 3 && ok(k) && ok(k + 1) {
        // centred when possible, otherwise shifted toward the interior
        let start = if k >= lo + 1 && ok(k - 1) && k + 2 <= hi && ok(k + 2) {
            Some(k - 1)
        } else if k + 3 <= hi && ok(k + 2) && ok(k + 3) {
            Some(k)
        } else if k >= lo + 2 && ok(k - 1) && ok(k - 2) {
            Some(k - 2)
        } else {
            None
        };
        if let Some(s0) = start {
            return cubic(s0);
        }
    }
    let pair = |j: usize| Stencil::pair(idx(j), idx(j + 1), t - j as f64);
    if lines.is_empty() {
        return pair(k);
    }
    match (same_side(k), same_side(k + 1)) {
        (true, true) => pair(k),
        (false, true) => {
            if k + 2 <= hi && same_side(k + 2) {
                pair(k + 1)
            } else {
                Stencil::node(idx(k + 1))
            }
        }
        (true, false) => {
            if k > lo && same_side(k - 1) {
                pair(k - 1)
            } else {
                Stencil::node(idx(k))
            }
        }
        (false, false) => {
            if k + 2 <= hi && same_side(k + 2) {
                if k + 3 <= hi && same_side(k + 3) {
                    pair(k + 2)
                } else {
                    Stencil::node(idx(k + 2))
                }
            } else if k > lo && same_side(k - 1) {
                if k > lo + 1 && same_side(k - 2) {
                    pair(k - 2)
                } else {
                    Stencil::node(idx(k - 1))
                }
            } else {
                pair(k)
            }
        }
    }
}

/// The line `nx·x + nξ·ξ = offset`, across which a field may jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscontinuityLine {
    pub nx: f64,
    pub nxi: f64,
    pub offset: f64,
}

impl DiscontinuityLine {
    pub fn new(nx: f64, nxi: f64, offset: f64) -> Self {
        let s = nx.hypot(nxi);
        Self { nx: nx / s, nxi: nxi / s, offset: offset / s }
    }

    /// The line `ξ = slope·x`.
    pub fn through_origin(slope: f64) -> Self {
        Self::new(-slope, 1.0, 0.0)
    }

    #[inline]
    pub fn signed(&self, x: f64, xi: f64) -> f64 {
        self.nx * x + self.nxi * xi - self.offset
    }

    #[inline]
    pub fn above(&self, x: f64, xi: f64) -> bool {
        self.signed(x, xi) > SIDE_TOL
    }

    pub fn distance(&self, x: f64, xi: f64) -> f64 {
        self.signed(x, xi).abs()
    }

    /// Image under `(x, ξ) ↦ (1 − ξ, 1 − x)`, keeping the side orientation.
    pub fn reflected(&self) -> Self {
        Self { nx: -self.nxi, nxi: -self.nx, offset: self.offset - self.nx - self.nxi }
    }

    /// Parameter `s` where `p + s·d` meets the line, if the segment is not parallel.
    pub fn crossing(&self, p: (f64, f64), d: (f64, f64)) -> Option<f64> {
        let den = self.nx * d.0 + self.nxi * d.1;
        if den.abs() < 1e-14 {
            None
        } else {
            Some(-self.signed(p.0, p.1) / den)
        }
    }
}

/// Appends `l` unless an identical line is already present.
pub fn push_unique(lines: &mut Vec<DiscontinuityLine>, l: DiscontinuityLine) {
    if !lines.iter().any(|m| (m.nx - l.nx).abs() + (m.nxi - l.nxi).abs() + (m.offset - l.offset).abs() < 1e-14) {
        lines.push(l);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelField {
    pub grid: TriangularGrid,
    pub values: Vec<f64>,
    pub lines: Vec<DiscontinuityLine>,
}

impl KernelField {
    pub fn zeros(grid: TriangularGrid) -> Self {
        Self { grid, values: vec![0.0; grid.node_count()], lines: Vec::new() }
    }

    pub fn from_fn(grid: TriangularGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = grid.nodes().map(|(a, b)| f(grid.coord(a), grid.coord(b))).collect();
        Self { grid, values, lines: Vec::new() }
    }

    pub fn with_lines(mut self, lines: Vec<DiscontinuityLine>) -> Self {
        self.lines = lines;
        self
    }

    #[inline]
    pub fn at(&self, a: usize, b: usize) -> f64 {
        self.values[self.grid.index(a, b)]
    }

    pub fn eval(&self, x: f64, xi: f64) -> Result<f64> {
        TriangularGrid::check_domain(x, xi)?;
        Ok(self.grid.interpolate(&self.values, x, xi, &self.lines, (x, xi)))
    }

    /// Evaluates the limit from the side of the flagged lines containing `r`.
    pub fn eval_side(&self, x: f64, xi: f64, r: (f64, f64)) -> f64 {
        self.grid.interpolate(&self.values, x, xi, &self.lines, r)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(x_a, F(x_a, x_a))` along the hypotenuse.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..=self.grid.n()).map(|a| self.at(a, a)).collect()
    }

    /// `F(1, ξ_b)` for `b = 0..=N`.
    pub fn trace_x1(&self) -> Vec<f64> {
        let n = self.grid.n();
        (0..=n).map(|b| self.at(n, b)).collect()
    }

    /// `F(x_a, 0)` for `a = 0..=N`.
    pub fn trace_xi0(&self) -> Vec<f64> {
        (0..=self.grid.n()).map(|a| self.at(a, 0)).collect()
    }

    /// `F̄(x, ξ) = F(1 − ξ, 1 − x)`.
    pub fn reflected(&self) -> Self {
        let g = self.grid;
        let n = g.n();
        let values = g.nodes().map(|(a, b)| self.at(n - b, n - a)).collect();
        Self { grid: g, values, lines: self.lines.iter().map(|l| l.reflected()).collect() }
    }
}

/// Row-major matrix of kernel fields on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub rows: usize,
    pub cols: usize,
    pub fields: Vec<KernelField>,
}

impl KernelMatrix {
    pub fn zeros(grid: TriangularGrid, rows: usize, cols: usize) -> Self {
        Self { rows, cols, fields: vec![KernelField::zeros(grid); rows * cols] }
    }

    pub fn get(&self, i: usize, j: usize) -> &KernelField {
        &self.fields[i * self.cols + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut KernelField {
        &mut self.fields[i * self.cols + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.fields.iter().fold(0.0, |m, f| m.max(f.max_abs()))
    }

    /// All flagged lines of all entries, without duplicates.
    pub fn all_lines(&self) -> Vec<DiscontinuityLine> {
        let mut out = Vec::new();
        for f in &self.fields {
            for &l in &f.lines {
                push_unique(&mut out, l);
            }
        }
        out
    }

    pub fn transposed_reflection(&self) -> Self {
        let mut fields = Vec::with_capacity(self.fields.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                fields.push(self.get(i, j).reflected());
            }
        }
        Self { rows: self.cols, cols: self.rows, fields }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn indexing_is_dense() {
        let g = TriangularGrid::new(7).unwrap();
        let idx: Vec<usize> = g.nodes().map(|(a, b)| g.index(a, b)).collect();
        assert_eq!(idx, (0..g.node_count()).collect::<Vec<_>>());
        assert!(TriangularGrid::new(1).is_err());
    }

    #[test]
    fn reproduces_linear_functions() {
        let g = TriangularGrid::new(10).unwrap();
        let f = KernelField::from_fn(g, |x, xi| 1.0 + 2.0 * x - 3.0 * xi);
        for &(x, xi) in &[(0.37, 0.11), (0.55, 0.549), (0.999, 0.4), (0.05, 0.05), (1.0, 0.0)] {
            assert_abs_diff_eq!(f.eval(x, xi).unwrap(), 1.0 + 2.0 * x - 3.0 * xi, epsilon = 1e-12);
        }
        assert!(matches!(f.eval(0.3, 0.5), Err(Error::Domain { .. })));
    }

    #[test]
    fn one_sided_across_line() {
        let g = TriangularGrid::new(20).unwrap();
        let line = DiscontinuityLine::through_origin(0.5);
        let f = KernelField::from_fn(g, |x, xi| if line.above(x, xi) { 10.0 + x + xi } else { x - xi })
            .with_lines(vec![line]);
        // vertical line x = 0.8 crosses at ξ = 0.4; query just above with an above reference
        let v = f.eval_side(0.8, 0.41, (0.8, 0.42));
        assert_abs_diff_eq!(v, 10.0 + 0.8 + 0.41, epsilon = 1e-12);
        let v = f.eval_side(0.8, 0.39, (0.8, 0.38));
        assert_abs_diff_eq!(v, 0.8 - 0.39, epsilon = 1e-12);
        // the limit on the line itself from both sides
        assert_abs_diff_eq!(f.eval_side(0.8, 0.4, (0.8, 0.45)), 11.2, epsilon = 1e-12);
        assert_abs_diff_eq!(f.eval_side(0.8, 0.4, (0.8, 0.35)), 0.4, epsilon = 1e-12);
    }

    #[test]
    fn reflection_is_involution() {
        let g = TriangularGrid::new(9).unwrap();
        let f = KernelField::from_fn(g, |x, xi| x * x - 0.3 * xi + x * xi)
            .with_lines(vec![DiscontinuityLine::through_origin(0.25)]);
        let r = f.reflected();
        assert_abs_diff_eq!(r.at(9, 0), f.at(9, 0));
        assert_abs_diff_eq!(r.at(5, 2), f.at(7, 4));
        let back = r.reflected();
        for (a, b) in back.values.iter().zip(&f.values) {
            assert_abs_diff_eq!(a, b);
        }
        assert_abs_diff_eq!(back.lines[0].nx, f.lines[0].nx, epsilon = 1e-15);
        assert_abs_diff_eq!(back.lines[0].offset, f.lines[0].offset, epsilon = 1e-15);
    }

    #[test]
    fn reflected_line_keeps_sides() {
        let l = DiscontinuityLine::through_origin(0.2);
        let r = l.reflected();
        for &(x, xi) in &[(0.9, 0.5), (0.9, 0.1), (0.5, 0.05)] {
            assert_eq!(l.above(x, xi), r.above(1.0 - xi, 1.0 - x));
        }
    }

    proptest! {
        #[test]
        fn interpolation_within_node_range(x in 0.0..1.0f64, t in 0.0..1.0f64, n in 2usize..30) {
            let g = TriangularGrid::new(n).unwrap();
            let f = KernelField::from_fn(g, |x, xi| (7.0 * x).sin() * (3.0 * xi).cos());
            let xi = t * x;
            let v = f.eval(x, xi).unwrap();
            let (lo, hi) = f.values.iter().fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }

        #[test]
        fn crossing_lands_on_line(px in 0.0..1.0f64, py in 0.0..1.0f64, dx in -1.0..1.0f64, dy in -1.0..1.0f64, c in 0.1..0.9f64) {
            let l = DiscontinuityLine::through_origin(c);
            if let Some(s) = l.crossing((px, py), (dx, dy)) {
                prop_assert!(l.distance(px + s * dx, py + s * dy) < 1e-9 * (1.0 + s.abs()));
            }
        }
    }
}

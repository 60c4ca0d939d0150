//! The backstepping transformation `β = v − ∫₀ˣ(Ku + Lv)`, its inverse, and
//! quadrature weights for kernel integrals against profiles on a uniform grid.

use nalgebra::DMatrix;

use super::controller::ControllerKernels;
use super::volterra;
use crate::error::{Error, Result};
use crate::grid::{KernelField, KernelMatrix};

/// Weights `W_k` with `∫₀^{x_l} k(x_l, ξ) f(ξ) dξ ≈ Σ_k W_k f(x_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeWeights {
    pub rows: usize,
    pub cols: usize,
    pub w: Vec<DMatrix<f64>>,
}

impl NodeWeights {
    /// `Σ_k W_k f(x_k)` with `profiles[j][k] = f_j(x_k)`.
    pub fn apply(&self, profiles: &[&[f64]]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (k, wk) in self.w.iter().enumerate() {
            for j in 0..self.cols {
                let f = profiles[j][k];
                if f != 0.0 {
                    for (i, o) in out.iter_mut().enumerate() {
                        *o += wk[(i, j)] * f;
                    }
                }
            }
        }
        out
    }
}

/// Quadrature points for `∫₀^x` on `nx` cells: `(ξ, weight, reference point)`,
/// split where the vertical line through `x` meets a flagged line.
fn points(kernel: &KernelMatrix, x: f64, nx: usize) -> Vec<(f64, f64, (f64, f64))> {
    let h = 1.0 / nx as f64;
    let guard = 1e-9 * h;
    let lines = kernel.all_lines();
    let mut breaks = vec![0.0];
    for l in &lines {
        if let Some(s) = l.crossing((x, 0.0), (0.0, 1.0)) {
            if s > guard && s < x - guard && !breaks.iter().any(|t: &f64| (t - s).abs() < guard) {
                breaks.push(s);
            }
        }
    }
    breaks.sort_by(|p, q| p.partial_cmp(q).unwrap());
    breaks.push(x);
    let mut out = Vec::new();
    if x <= 0.0 {
        return out;
    }
    for piece in breaks.windows(2) {
        let (s0, s1) = (piece[0], piece[1]);
        let r = (x, 0.5 * (s0 + s1));
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
            out.push((ss[k], w, r));
        }
    }
    out
}

/// Weights at `x_l = l/nx` for the kernel matrix `kernel`.
pub fn node_weights(kernel: &KernelMatrix, l: usize, nx: usize) -> NodeWeights {
    let (rows, cols) = (kernel.rows, kernel.cols);
    let x = l as f64 / nx as f64;
    let mut w = vec![DMatrix::zeros(rows, cols); l + 1];
    for (s, q, r) in points(kernel, x, nx) {
        let t = s * nx as f64;
        let k0 = (t.floor() as usize).min(l.saturating_sub(1));
        let f = if l == 0 { 0.0 } else { t - k0 as f64 };
        let kv = DMatrix::from_fn(rows, cols, |i, j| kernel.get(i, j).eval_side(x, s, r));
        w[k0] += &kv * (q * (1.0 - f));
        if f != 0.0 {
            w[k0 + 1] += &kv * (q * f);
        }
    }
    NodeWeights { rows, cols, w }
}

/// `out_i(x_l) = Σ_j ∫₀^{x_l} k_ij(x_l, ξ) f_j(ξ) dξ` for every node.
pub fn volterra_apply(kernel: &KernelMatrix, profiles: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
    if profiles.len() != kernel.cols {
        return Err(Error::Dimension(format!("{} profiles for a kernel with {} columns", profiles.len(), kernel.cols)));
    }
    let len = profiles.first().map_or(0, |p| p.len());
    if len < 2 || profiles.iter().any(|p| p.len() != len) {
        return Err(Error::Dimension("profiles must share a length of at least 2".into()));
    }
    let nx = len - 1;
    let mut out = vec![vec![0.0; len]; kernel.rows];
    for l in 0..=nx {
        let v = node_weights(kernel, l, nx).apply(profiles);
        for (i, o) in out.iter_mut().enumerate() {
            o[l] = v[i];
        }
    }
    Ok(out)
}

/// `(α, β) = (u, v − ∫₀ˣ(Ku + Lv))`.
pub fn forward(kernels: &ControllerKernels, u: &[Vec<f64>], v: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let kl = volterra::hcat(&kernels.k, &kernels.l);
    let profiles: Vec<&[f64]> = u.iter().chain(v).map(|p| p.as_slice()).collect();
    let integral = volterra_apply(&kl, &profiles)?;
    let beta = v.iter().zip(&integral).map(|(vi, ii)| vi.iter().zip(ii).map(|(a, b)| a - b).collect()).collect();
    Ok((u.to_vec(), beta))
}

/// `(u, v) = (α, β + ∫₀ˣ(C⁺α + C⁻β))`.
pub fn inverse(
    kernels: &ControllerKernels,
    alpha: &[Vec<f64>],
    beta: &[Vec<f64>],
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let c = volterra::hcat(&kernels.c_plus, &kernels.c_minus);
    let profiles: Vec<&[f64]> = alpha.iter().chain(beta).map(|p| p.as_slice()).collect();
    let integral = volterra_apply(&c, &profiles)?;
    let v = beta.iter().zip(&integral).map(|(bi, ii)| bi.iter().zip(ii).map(|(a, b)| a + b).collect()).collect();
    Ok((alpha.to_vec(), v))
}

/// The kernel `R` of `(u,v) = (α,β) − ∫₀ˣ R(α,β)`, computed independently of
/// `C±` as minus the resolvent of `[[0,0],[K,L]]` in its left form.
pub fn invert_transform(kernels: &ControllerKernels) -> Result<KernelMatrix> {
    let (n, m) = (kernels.n(), kernels.m());
    let kl = volterra::hcat(&kernels.k, &kernels.l);
    let gamma_v = volterra::solve_left(&kl, &kernels.l, 1.0)?;
    let grid = kernels.grid;
    let size = n + m;
    let mut fields = Vec::with_capacity(size * size);
    for i in 0..size {
        for j in 0..size {
            if i < n {
                fields.push(KernelField::zeros(grid));
            } else {
                let mut f = gamma_v.get(i - n, j).clone();
                f.values.iter_mut().for_each(|v| *v = -*v);
                fields.push(f);
            }
        }
    }
    Ok(KernelMatrix { rows: size, cols: size, fields })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TriangularGrid;
    use approx::assert_abs_diff_eq;

    fn scalar(grid: TriangularGrid, f: impl Fn(f64, f64) -> f64) -> KernelMatrix {
        KernelMatrix { rows: 1, cols: 1, fields: vec![KernelField::from_fn(grid, f)] }
    }

    #[test]
    fn weights_integrate_smooth_product() {
        let g = TriangularGrid::new(40).unwrap();
        let k = scalar(g, |x, xi| x + xi * xi);
        let nx = 64;
        let f: Vec<f64> = (0..=nx).map(|i| (i as f64 / nx as f64).cos()).collect();
        let got = volterra_apply(&k, &[&f]).unwrap();
        // reference from a much finer trapezoid rule
        let fine = 20000;
        let want: f64 = (0..=fine)
            .map(|i| {
                let s = i as f64 / fine as f64;
                let w = if i == 0 || i == fine { 0.5 } else { 1.0 };
                w * (1.0 + s * s) * s.cos() / fine as f64
            })
            .sum();
        assert_abs_diff_eq!(got[0][nx], want, epsilon = 2e-4);
        assert_eq!(got[0][0], 0.0);
    }

    #[test]
    fn dimension_checks() {
        let g = TriangularGrid::new(4).unwrap();
        let k = scalar(g, |_, _| 1.0);
        assert!(volterra_apply(&k, &[]).is_err());
        assert!(volterra_apply(&k, &[&[1.0]]).is_err());
    }
}

//! Forward and inverse backstepping transforms, and the resolvent computed
//! independently of `C±`.

use hyperbolic_backstepping::kernels::transform::{forward, inverse};
use hyperbolic_backstepping::kernels::{invert_transform, ControllerKernels, PicardOptions};
use hyperbolic_backstepping::sim::Grid1D;
use hyperbolic_backstepping::verify::heterodirectional_test_system;

fn main() -> hyperbolic_backstepping::Result<()> {
    let sys = heterodirectional_test_system();
    for n in [50, 100, 200] {
        let kern = ControllerKernels::solve(&sys, n, PicardOptions::default())?;
        let grid = Grid1D::new(n)?;
        let u = vec![grid.sample(|x| (3.0 * x).sin())];
        let v = vec![grid.sample(|x| (2.0 * x).cos()), grid.sample(|x| x * x - 0.5)];
        let (a, b) = forward(&kern, &u, &v)?;
        let (_, v2) = inverse(&kern, &a, &b)?;
        let err = v.iter().zip(&v2).flat_map(|(p, q)| p.iter().zip(q).map(|(s, t)| (s - t).abs())).fold(0.0, f64::max);

        // C⁻ against minus the v-columns of the resolvent
        let r = invert_transform(&kern)?;
        let gap = (0..2).map(|i| (0..2).map(|j| {
            let (c, rr) = (kern.c_minus.get(i, j), r.get(1 + i, 1 + j));
            c.values.iter().zip(&rr.values).map(|(p, q)| (p + q).abs()).fold(0.0, f64::max)
        }).fold(0.0, f64::max)).fold(0.0, f64::max);
        println!("N = {n:3}: round trip {err:.3e} ({:.2}·Δ²), |C⁻ + R| = {gap:.2e}", err * (n * n) as f64);
    }
    Ok(())
}

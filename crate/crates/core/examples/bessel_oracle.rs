//! The numerical kernels of the planning system against the explicit Bessel
//! expressions, away from the discontinuity line ξ = 0.2x.

use hyperbolic_backstepping::kernels::closed_form::{closed_form_2x2, pde_residuals};
use hyperbolic_backstepping::kernels::{closed_form_artificial, picard_solve_controller, L12Prefactor, PicardOptions};
use hyperbolic_backstepping::verify::planning_system;
use hyperbolic_backstepping::TriangularGrid;

fn main() -> hyperbolic_backstepping::Result<()> {
    let (mu1, mu2, s12, s21) = (1.0, 0.2, 2.0, 5.0);
    for v in [L12Prefactor::AsPrinted, L12Prefactor::Swapped] {
        let r = pde_residuals(mu1, mu2, s12, s21, 0.8, 0.5, 1e-5, v)?;
        println!("{}: residuals {r:?}", v.label());
    }

    let sys = planning_system();
    for n in [50, 100] {
        let grid = TriangularGrid::new(n)?;
        let kern = picard_solve_controller(&sys, grid, closed_form_artificial(&sys)?, PicardOptions::default())?;
        let h = grid.step();
        let mut err = [0.0f64; 4];
        for (a, b) in grid.nodes() {
            let (x, xi) = (a as f64 * h, b as f64 * h);
            if (xi - mu2 / mu1 * x).abs() <= 2.0 * h {
                continue;
            }
            let cf = closed_form_2x2(mu1, mu2, s12, s21, x, xi)?;
            for (f, e) in err.iter_mut().enumerate() {
                *e = e.max((kern.l.get(f / 2, f % 2).at(a, b) - cf.get(f / 2, f % 2)).abs());
            }
        }
        println!("N = {n}: max error L11 {:.2e}, L12 {:.2e}, L21 {:.2e}, L22 {:.2e}", err[0], err[1], err[2], err[3]);
    }
    Ok(())
}

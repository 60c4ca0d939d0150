//! Observer kernels and the output-injection gains they produce.

use hyperbolic_backstepping::kernels::{solve_observer_kernels, PicardOptions};
use hyperbolic_backstepping::verify::heterodirectional_test_system;
use hyperbolic_backstepping::TriangularGrid;

fn main() -> hyperbolic_backstepping::Result<()> {
    let sys = heterodirectional_test_system();
    let obs = solve_observer_kernels(&sys, TriangularGrid::new(100)?, PicardOptions::default())?;
    println!("{} iterations, max|M| = {:.4}, max|N| = {:.4}", obs.report.iterations, obs.m.max_abs(), obs.n.max_abs());
    println!("   x      P+_11     P+_12     P-_21     h_12");
    for x in [0.0, 0.25, 0.5, 0.75, 1.0] {
        println!(
            "{x:5.2} {:+9.4} {:+9.4} {:+9.4} {:+9.4}",
            obs.p_plus.eval(0, 0, x),
            obs.p_plus.eval(0, 1, x),
            obs.p_minus.eval(1, 0, x),
            obs.h.eval(0, 1, x)
        );
    }
    Ok(())
}

//! Kernels of the heterodirectional test system, their convergence history
//! and the constructive bound.

use hyperbolic_backstepping::kernels::{default_eps, theoretical_bound, ControllerKernels, PicardOptions};
use hyperbolic_backstepping::verify::heterodirectional_test_system;

fn main() -> hyperbolic_backstepping::Result<()> {
    let sys = heterodirectional_test_system();
    let n = 100;
    let kern = ControllerKernels::solve(&sys, n, PicardOptions::default())?;
    let r = &kern.report;
    println!("{} iterations, converged = {}", r.iterations, r.converged);
    for (q, inc) in r.increments.iter().enumerate().step_by(3) {
        println!("  |ΔH^{}| = {inc:.3e}", q + 1);
    }

    let bound = theoretical_bound(&sys, &kern.artificial, default_eps(&sys.mu))?;
    println!("max|K| = {:.4}, max|L| = {:.4}, bound at (1, 0) = {:.4e}", kern.k.max_abs(), kern.l.max_abs(), bound.eval(1.0, 0.0));

    for xi in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let k = kern.k.get(0, 0).eval(1.0, xi)?;
        let l = kern.l.get(1, 0).eval(1.0, xi)?;
        println!("  ξ = {xi:.2}: K11(1,ξ) = {k:+.5}, L21(1,ξ) = {l:+.5}");
    }
    println!("g21(x) at x = 0.5: {:+.5}", kern.g.eval(1, 0, 0.5));
    Ok(())
}

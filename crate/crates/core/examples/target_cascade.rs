//! The target system: direct integration against the exact cascade solution.

use hyperbolic_backstepping::kernels::transform::forward;
use hyperbolic_backstepping::kernels::{ControllerKernels, PicardOptions};
use hyperbolic_backstepping::sim::{run_target_system, BetaPropagator, FieldState, Grid1D, RunConfig};
use hyperbolic_backstepping::verify::heterodirectional_test_system;

fn main() -> hyperbolic_backstepping::Result<()> {
    let sys = heterodirectional_test_system();
    let kern = ControllerKernels::solve(&sys, 100, PicardOptions::default())?;
    let grid = Grid1D::new(400)?;

    // β from a plant state with u = 0, so α stays zero and β is a pure cascade
    let v: Vec<Vec<f64>> = (0..2).map(|j| grid.sample(|x| (x * (1.0 - x)).powi(2) * (1.0 + j as f64))).collect();
    let (alpha, beta) = forward(&kern, &[grid.sample(|_| 0.0)], &v)?;
    let initial = FieldState { t: 0.0, u: alpha, v: beta.clone() };

    let t_m: f64 = sys.mu.iter().map(|m| 1.0 / m).sum();
    let run = run_target_system(&sys, &kern, initial, None, RunConfig::new(1.1 * t_m))?;
    let zero = |_: usize, _: f64| 0.0;
    let init = move |i: usize, x: f64| {
        let p = &beta[i];
        let s = x * (p.len() - 1) as f64;
        let k = (s as usize).min(p.len() - 2);
        p[k] + (s - k as f64) * (p[k + 1] - p[k])
    };
    let exact = BetaPropagator::new(&sys.mu, &kern.g, &zero).with_initial(&init);
    for t in [0.5, 1.0, 2.0, 4.0, 6.0, 6.6] {
        println!(
            "t = {t:4.1}: β2(t,0) simulated {:+.4e}, exact {:+.4e}; |β|_L2 = {:.2e}",
            run.value_at("beta2_x0", t),
            exact.value(1, t, 0.0)?,
            run.value_at("norm_L2_beta", t)
        );
    }
    Ok(())
}

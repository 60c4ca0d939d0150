//! Boundary observer from a zero estimate, then output feedback.

use hyperbolic_backstepping::kernels::{solve_observer_kernels, ControllerKernels, PicardOptions};
use hyperbolic_backstepping::sim::{run_observer, FieldState, Grid1D, ObserverMode, RunConfig};
use hyperbolic_backstepping::verify::{compatible_state, heterodirectional_test_system};

fn main() -> hyperbolic_backstepping::Result<()> {
    let sys = heterodirectional_test_system();
    let t_f = sys.horizons()?.t_f.expect("has u-states");
    let ctrl = ControllerKernels::solve(&sys, 100, PicardOptions::default())?;
    let obs = solve_observer_kernels(&sys, ctrl.grid, PicardOptions::default())?;
    let nx = 200;
    let truth = compatible_state(&sys, &ctrl, nx)?;
    let estimate = FieldState::zeros(sys.n(), sys.m(), Grid1D::new(nx)?);

    for (mode, horizon) in [(ObserverMode::StateFeedbackPlant, 1.1), (ObserverMode::OutputFeedback, 2.2)] {
        let run = run_observer(&sys, &obs, &ctrl, &truth, &estimate, mode, RunConfig::new(horizon * t_f))?;
        println!("{mode:?}");
        for k in 0..=4 {
            let t = k as f64 * 0.25 * horizon * t_f;
            println!("  t = {t:6.2}: plant {:.3e}, estimate error {:.3e}", run.value_at("norm_L2", t), run.value_at("err_L2", t));
        }
    }
    Ok(())
}

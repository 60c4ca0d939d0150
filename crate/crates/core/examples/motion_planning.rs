//! Boundary inputs that make `v(t, 0)` follow `(sin 2πt, cos 2πt)` after `t_M`.

use hyperbolic_backstepping::kernels::{closed_form_artificial, picard_solve_controller, PicardOptions};
use hyperbolic_backstepping::planner::{plan_boundary_inputs, run_tracking};
use hyperbolic_backstepping::sim::{FieldState, Grid1D, RunConfig, Scheme};
use hyperbolic_backstepping::verify::{planning_system, reference_signal};
use hyperbolic_backstepping::TriangularGrid;

fn main() -> hyperbolic_backstepping::Result<()> {
    let sys = planning_system();
    let kern = picard_solve_controller(&sys, TriangularGrid::new(100)?, closed_form_artificial(&sys)?, PicardOptions::default())?;
    let phi = reference_signal();
    let plan = plan_boundary_inputs(&kern, &sys, &phi)?;
    println!("look-ahead {:.2}; B(0) = {:?}", plan.lookahead(), plan.eval(0.0));

    let t_m = sys.horizons()?.t_m;
    let initial = FieldState::zeros(0, 2, Grid1D::new(400)?);
    let run = run_tracking(&sys, &kern, &phi, initial, RunConfig::new(2.0 * t_m).with_scheme(Scheme::Characteristic))?;
    for t in [0.5, 1.5, 3.0, 6.0, 6.6, 9.0, 12.0] {
        println!("t = {t:5.2}: |v1(t,0) − Φ1| = {:.2e}, |v2(t,0) − Φ2| = {:.2e}", run.value_at("track_err1", t), run.value_at("track_err2", t));
    }
    println!("RMS over [1.1 t_M, 2 t_M]: {:.2e}, {:.2e}", run.rms_over("track_err1", 1.1 * t_m, 2.0 * t_m), run.rms_over("track_err2", 1.1 * t_m, 2.0 * t_m));
    Ok(())
}

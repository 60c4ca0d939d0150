//! Open loop against full-state feedback on the unstable test system.

use hyperbolic_backstepping::kernels::{ControllerKernels, PicardOptions};
use hyperbolic_backstepping::sim::{run_closed_loop, run_open_loop, RunConfig};
use hyperbolic_backstepping::verify::{compatible_state, heterodirectional_test_system};

fn main() -> hyperbolic_backstepping::Result<()> {
    let sys = heterodirectional_test_system();
    let t_f = sys.horizons()?.t_f.expect("has u-states");
    let kern = ControllerKernels::solve(&sys, 100, PicardOptions::default())?;
    let initial = compatible_state(&sys, &kern, 200)?;
    let cfg = RunConfig::new(1.1 * t_f);

    let open = run_open_loop(&sys, initial.clone(), cfg)?;
    let closed = run_closed_loop(&sys, &kern, initial, cfg)?;
    println!("    t    open-loop   closed-loop   U1        U2");
    for k in 0..=11 {
        let t = k as f64 * 0.1 * t_f;
        println!(
            "{t:5.2}  {:10.3e}  {:10.3e}  {:+8.4}  {:+8.4}",
            open.value_at("norm_L2", t),
            closed.value_at("norm_L2", t),
            closed.value_at("ctrl1", t),
            closed.value_at("ctrl2", t)
        );
    }
    let ratio = closed.last("norm_L2") / closed.max_over("norm_L2", 0.0, cfg.t_end);
    println!("closed loop at 1.1 t_F: {ratio:.3e} of its running maximum");
    Ok(())
}

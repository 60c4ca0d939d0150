//! Validation rules, time horizons and the isotachic decoupling.

use hyperbolic_backstepping::system::isotachic_decoupling;
use hyperbolic_backstepping::verify::{heterodirectional_test_system, planning_system};
use hyperbolic_backstepping::HyperbolicSystem;
use nalgebra::dmatrix;

fn main() -> hyperbolic_backstepping::Result<()> {
    for (name, sys) in [("heterodirectional", heterodirectional_test_system()), ("planning", planning_system())] {
        let h = sys.horizons()?;
        println!("{name}: valid = {}, t_F = {:?}, t_M = {:.3}", sys.validate().ok, h.t_f, h.t_m);
    }

    let tied = HyperbolicSystem::uncoupled(vec![1.0], vec![0.5, 0.5]);
    println!("tied speeds: {}", tied.validate());

    // two states moving at the same speed are decoupled by a matrix exponential
    let (b, c) = isotachic_decoupling(&dmatrix![0.0, 1.0; -1.0, 0.0], 0.5, 1.0)?;
    println!("B(1) = {b:.4}B(1)·C(1) = {:.2e} off identity", (&b * &c - nalgebra::DMatrix::identity(2, 2)).amax());
    Ok(())
}

//! A cheap slice of the acceptance suite at reduced resolution.
//! The round-trip constant is only meaningful at the default resolutions, so it
//! is left out here.

use hyperbolic_backstepping::verify::{run_suite, VerifySettings};

fn main() {
    let settings = VerifySettings { n_coarse: 60, n_fine: 120, nx_coarse: 100, nx_fine: 200, ..VerifySettings::default() };
    for o in run_suite(settings, &[3, 9]) {
        println!("{}", o.machine_line());
        println!("  {}", o.detail);
    }
}

//! One line per acceptance criterion. `HB_CRITERION=1,4` restricts the run.
//! Built without the test harness so the lines are never captured.

use hyperbolic_backstepping::verify::{parse_criterion, run_suite, VerifySettings};

fn main() {
    let only: Vec<u8> = std::env::var("HB_CRITERION")
        .map(|s| s.split(',').filter_map(parse_criterion).collect())
        .unwrap_or_default();
    let outcomes = run_suite(VerifySettings::default(), &only);
    for o in &outcomes {
        println!("{}", o.machine_line());
    }
    for o in &outcomes {
        println!("{o}");
    }
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("acceptance: {} criteria passed", outcomes.len());
}

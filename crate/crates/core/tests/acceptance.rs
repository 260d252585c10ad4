//! Runs the oracle-consistency suite and prints one line per criterion.

use fracops::cli::checks::{run_check, CHECKS};

fn main() {
    let mut failed = 0;
    for i in 0..CHECKS.len() {
        let r = run_check(i, 1);
        println!(
            "{} {:>2} {:<34} measured {:.3e} (tol {:.1e}) [{:.1} s] {}",
            if r.passed { "PASS" } else { "FAIL" },
            i + 1,
            r.name,
            r.measured,
            r.tolerance,
            r.seconds,
            r.detail
        );
        if !r.passed {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", CHECKS.len() - failed, CHECKS.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
